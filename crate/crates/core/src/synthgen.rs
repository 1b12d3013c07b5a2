//! Synthetic chat corpora with planted ground truth.
//!
//! The generator plants three kinds of structure that the analysis side is
//! expected to recover: rectangular broadcast windows per channel, bot
//! accounts with low-entropy repetitive text, and a per-user output
//! response that rises up to a volume knee and falls past it. Generation is
//! fully deterministic for a fixed seed: channels draw from independent
//! streams seeded by hashing the master seed with the channel index, so
//! corpus bytes never depend on scheduling.
//!
//! Inside a planted broadcast window the generator draws a target volume,
//! subtracts the fixed bot contribution, and divides the remainder among
//! `round(H / m(V))` participants, each emitting a Poisson count with mean
//! `H / U`. That makes the expected per-writer output track the planted
//! response curve while the expected window total stays on target.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::murmur3_u64;
use crate::metrics::DEFAULT_MARKERS;
use crate::rng::Rng;
use crate::time::{TimeDelta, Timestamp};

/// Emote codes used by the human text model: the word-like bundled codes,
/// so a default-lexicon analysis matches what the generator plants.
pub const BUILTIN_EMOTES: &[&str] = &[
    "Kappa",
    "PogChamp",
    "LUL",
    "FailFish",
    "HeyGuys",
    "BibleThump",
    "Kreygasm",
    "SeemsGood",
    "NotLikeThis",
    "ResidentSleeper",
    "TriHard",
    "4Head",
    "DansGame",
    "SwiftRage",
    "CoolCat",
    "KappaPride",
    "PJSalt",
    "WutFace",
    "OpieOP",
    "EleGiggle",
];

const SEED_SENTENCES: &[&str] = &[
    "that was a really close game",
    "how did you even survive that fight",
    "nice play honestly did not see it coming",
    "what build are you running this season",
    "the stream quality looks great today",
    "anyone know when the tournament starts",
    "i cannot believe he missed that shot",
    "this boss fight took me three hours yesterday",
    "the new patch completely changed the meta",
    "good luck with the ranked climb tonight",
    "that jump was frame perfect wow",
    "chat is moving way too fast right now",
    "do you stream every day or just weekends",
    "my favorite part was the clutch at the end",
    "the music in this zone is so good",
    "can you show the settings menu quickly",
    "first time here this is awesome",
    "we have been waiting for this drop forever",
    "that strategy never works against good players",
    "remember to take a break and drink water",
    "the crowd went completely silent after that",
    "what a comeback from ten points down",
    "i learned so much from watching these runs",
    "the speedrun record might actually fall today",
    "greetings from the other side of the world",
    "my game crashes every time i try that trick",
    "does anyone have a link to the overlay",
    "he has been grinding this level all week",
    "that sound effect gets me every time",
    "imagine losing with that much gold lead",
    "the duo queue synergy is unreal tonight",
    "which keyboard is that the clicks sound crisp",
    "lag spike at the worst possible moment",
    "they should nerf that ability into the ground",
    "watching this at work do not tell my boss",
    "the editor deserves a raise for that clip",
    "never seen this route attempted on console",
    "my heart was racing during that last round",
    "the announcer voice makes everything better",
    "somebody clip that for the highlight reel",
    "ten more wins until the next rank up",
    "the pixel art in this game is gorgeous",
    "i was here when the record happened",
    "both teams are playing so passively now",
    "that trade was terrible value long term",
    "the finale starts in about twenty minutes",
    "you make this look way too easy",
    "raid incoming say hello to the new folks",
    "weather ruined my plans so marathon time",
    "grats on the sub goal well earned",
    "the vod from last night was hilarious",
    "practice mode first then ranked trust me",
];

const BOT_TEMPLATES: &[&str] = &[
    "Follow the channel to catch every stream as it goes live",
    "Check the full schedule and past highlights on the channel page",
    "Type !points in chat to see your current point balance",
    "New clip is up now on the highlights page go watch it",
    "Subscribe today to unlock the full set of channel emotes",
    "Hourly giveaway is active type !enter to join the draw",
    "Remember to follow the chat rules and be kind to each other",
    "Song request queue is open type !sr with a link",
];

/// Per-class text entropy: high draws from the bigram model, low cycles a
/// small set of near-duplicate lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entropy {
    Low,
    High,
}

/// Piecewise-linear planted response: output rises from `base_output` at
/// volume 0 to `peak_output` at `v_star`, then falls to `tail_output` at
/// `tail_v` and stays flat beyond.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResponseSpec {
    pub v_star: u64,
    pub base_output: f64,
    pub peak_output: f64,
    pub tail_output: f64,
    pub tail_v: u64,
}

impl Default for ResponseSpec {
    fn default() -> Self {
        ResponseSpec {
            v_star: 40,
            base_output: 1.0,
            peak_output: 6.0,
            tail_output: 1.0,
            tail_v: 200,
        }
    }
}

impl ResponseSpec {
    /// Expected per-writer output at window volume `v`, floored away from 0
    /// so Poisson draws stay well defined.
    pub fn output_at(&self, v: u64) -> f64 {
        let v = v as f64;
        let v_star = self.v_star as f64;
        let tail_v = self.tail_v as f64;
        let m = if v <= v_star {
            self.base_output + (self.peak_output - self.base_output) * v / v_star
        } else if v < tail_v {
            self.peak_output
                + (self.tail_output - self.peak_output) * (v - v_star) / (tail_v - v_star)
        } else {
            self.tail_output
        };
        m.max(0.05)
    }

    fn sub_slope(&self) -> f64 {
        (self.peak_output - self.base_output) / self.v_star as f64
    }

    fn sup_slope(&self) -> f64 {
        (self.tail_output - self.peak_output) / (self.tail_v - self.v_star) as f64
    }
}

/// Injection rates for the human text model, plus entropy class per user
/// kind.
///
/// The mutation, number, gibberish, and personal-token rates exist to keep
/// large human corpora from compressing like machine output: live chat is
/// full of typos, case shifts, scores, and private slang, and the
/// classifier depends on that texture. Defaults are calibrated so human
/// accounts stay above the retention threshold even past 10 KiB of text
/// while template bots stay far below it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TextSpec {
    pub question_rate: f64,
    pub mention_rate: f64,
    pub marker_rate: f64,
    pub emote_rate: f64,
    /// Per-word chance of a spelling mutation (elongation, case shift,
    /// letter swap, suffix).
    pub mutation_rate: f64,
    /// Per-word chance of jumping to a uniformly random vocabulary word
    /// instead of a bigram successor.
    pub word_salad_rate: f64,
    /// Per-message chance of appending a numeric token.
    pub number_rate: f64,
    /// Per-message chance of appending a keyboard-mash token.
    pub gibberish_rate: f64,
    /// Per-message chance of injecting one of the user's personal tokens.
    pub personal_rate: f64,
    pub human_entropy: Entropy,
    pub bot_entropy: Entropy,
}

impl Default for TextSpec {
    fn default() -> Self {
        TextSpec {
            question_rate: 0.12,
            mention_rate: 0.10,
            marker_rate: 0.25,
            emote_rate: 0.30,
            mutation_rate: 0.60,
            word_salad_rate: 0.45,
            number_rate: 0.40,
            gibberish_rate: 0.30,
            personal_rate: 0.12,
            human_entropy: Entropy::High,
            bot_entropy: Entropy::Low,
        }
    }
}

/// Planted broadcast window, as a half-open slot range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedInterval {
    pub start_slot: u64,
    pub end_slot: u64,
}

/// Broadcast plan: either one explicit slot-range list per channel, or a
/// regular on/off cycle applied to every channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanSpec {
    Regular {
        on_slots: u64,
        off_slots: u64,
        #[serde(default)]
        start_offset: u64,
    },
    Explicit(Vec<Vec<PlannedInterval>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start: Timestamp,
    #[serde(default = "default_dt_minutes")]
    pub dt_minutes: u32,
    /// Total span of the corpus in grid slots.
    pub slots: u64,
    pub channels: u32,
    pub users_per_channel: u32,
    /// Fraction of each channel's accounts that are bots.
    #[serde(default)]
    pub bot_fraction: f64,
    /// Messages each bot posts per broadcast slot, at a fixed cadence.
    #[serde(default = "default_bot_rate")]
    pub bot_messages_per_slot: u32,
    /// Expected channel-wide messages per slot outside broadcasts.
    #[serde(default = "default_off_rate")]
    pub off_rate: f64,
    /// Probability of drawing a window target from `volume_sub`.
    #[serde(default = "default_volume_split")]
    pub volume_split: f64,
    /// Inclusive target-volume range below the response knee.
    #[serde(default = "default_volume_sub")]
    pub volume_sub: (u64, u64),
    /// Inclusive target-volume range above the knee.
    #[serde(default = "default_volume_sup")]
    pub volume_sup: (u64, u64),
    #[serde(default)]
    pub response: ResponseSpec,
    #[serde(default)]
    pub text: TextSpec,
    pub plan: PlanSpec,
}

fn default_start() -> Timestamp {
    Timestamp::parse_iso8601("2014-09-01T00:00:00Z").expect("valid constant")
}

fn default_dt_minutes() -> u32 {
    5
}

fn default_bot_rate() -> u32 {
    2
}

fn default_off_rate() -> f64 {
    0.25
}

fn default_volume_split() -> f64 {
    0.5
}

fn default_volume_sub() -> (u64, u64) {
    (5, 40)
}

fn default_volume_sup() -> (u64, u64) {
    (40, 260)
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o error writing corpus: {0}")]
    Io(#[from] std::io::Error),
}

fn config_err(msg: impl Into<String>) -> SynthError {
    SynthError::Config(msg.into())
}

/// Ground truth planted into a generated corpus. Identifiers are the raw
/// (pre-anonymization) names written to the corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Planted broadcast windows per channel.
    pub broadcasts: BTreeMap<String, Vec<TruthInterval>>,
    pub bot_ids: BTreeSet<String>,
    /// Planted response parameters per human user.
    pub response_params: BTreeMap<String, PlantedResponse>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthInterval {
    pub start: Timestamp,
    pub end: Timestamp,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlantedResponse {
    pub v_star: u64,
    pub sub_slope: f64,
    pub sup_slope: f64,
    /// True when the planted response declines past the knee.
    pub overload: bool,
}

struct BigramModel {
    starts: Vec<&'static str>,
    vocab: Vec<&'static str>,
    table: std::collections::HashMap<&'static str, Vec<&'static str>>,
}

impl BigramModel {
    fn build() -> Self {
        let mut starts = Vec::new();
        let mut vocab: BTreeSet<&'static str> = BTreeSet::new();
        let mut table: std::collections::HashMap<&'static str, Vec<&'static str>> =
            std::collections::HashMap::new();
        for sentence in SEED_SENTENCES {
            let words: Vec<&'static str> = sentence.split(' ').collect();
            if let Some(&first) = words.first() {
                starts.push(first);
            }
            vocab.extend(words.iter().copied());
            for pair in words.windows(2) {
                table.entry(pair[0]).or_default().push(pair[1]);
            }
        }
        BigramModel { starts, vocab: vocab.into_iter().collect(), table }
    }

    /// Bigram walk with occasional uniform jumps; the jumps both diversify
    /// the word stream and reroute the rest of the walk.
    fn walk(&self, rng: &mut Rng, words: usize, salad_rate: f64, out: &mut Vec<&'static str>) {
        let mut current = self.starts[rng.range_usize(0, self.starts.len() - 1)];
        out.push(current);
        for _ in 1..words {
            let next = if rng.chance(salad_rate) {
                self.vocab[rng.range_usize(0, self.vocab.len() - 1)]
            } else {
                match self.table.get(current) {
                    Some(followers) => followers[rng.range_usize(0, followers.len() - 1)],
                    None => self.starts[rng.range_usize(0, self.starts.len() - 1)],
                }
            };
            out.push(next);
            current = next;
        }
    }
}

struct ChannelState {
    name: String,
    rng: Rng,
    humans: Vec<String>,
    bots: Vec<String>,
    /// Private slang tokens per human, injected at `personal_rate`.
    personal_tokens: Vec<[String; 2]>,
    /// Scratch index vector for selecting active writers.
    picker: Vec<usize>,
    /// Scratch word buffer for the bigram walk.
    words: Vec<&'static str>,
    /// Per-bot message counters driving near-duplicate variation.
    bot_counters: Vec<u64>,
    intervals: Vec<PlannedInterval>,
}

impl ChannelState {
    fn in_broadcast(&self, slot: u64) -> bool {
        self.intervals.iter().any(|iv| iv.start_slot <= slot && slot < iv.end_slot)
    }
}

/// One message pending within the current slot; sorted by offset before
/// being written out so the corpus is globally time ordered.
struct SlotMessage {
    offset_secs: i64,
    channel_idx: usize,
    user: UserRef,
    text: String,
}

#[derive(Clone, Copy)]
enum UserRef {
    Human(usize),
    Bot(usize),
}

pub struct Generated {
    pub truth: GroundTruth,
    pub messages_written: u64,
}

/// Generates a TSV corpus into `out` and returns the planted ground truth.
/// Deterministic: a fixed config (including seed) produces identical bytes.
pub fn generate<W: Write>(config: &SynthConfig, out: &mut W) -> Result<Generated, SynthError> {
    let plan = validate(config)?;
    let dt = TimeDelta::from_minutes(config.dt_minutes as i64);
    let dt_secs = dt.as_ms() / 1_000;
    let model = BigramModel::build();

    let n_bots_per_channel =
        ((config.users_per_channel as f64) * config.bot_fraction).round() as usize;
    let mut channels: Vec<ChannelState> = Vec::with_capacity(config.channels as usize);
    let mut truth = GroundTruth {
        broadcasts: BTreeMap::new(),
        bot_ids: BTreeSet::new(),
        response_params: BTreeMap::new(),
    };

    for (idx, channel_plan) in plan.iter().enumerate() {
        let name = format!("ch{idx:04}");
        let mut humans = Vec::new();
        let mut bots = Vec::new();
        for u in 0..config.users_per_channel as usize {
            if u < n_bots_per_channel {
                bots.push(format!("bot{idx:04}_{u:04}"));
            } else {
                humans.push(format!("viewer{idx:04}_{u:04}"));
            }
        }
        truth.bot_ids.extend(bots.iter().cloned());
        let planted = PlantedResponse {
            v_star: config.response.v_star,
            sub_slope: config.response.sub_slope(),
            sup_slope: config.response.sup_slope(),
            overload: config.response.sup_slope() < 0.0,
        };
        for human in &humans {
            truth.response_params.insert(human.clone(), planted);
        }
        truth.broadcasts.insert(
            name.clone(),
            channel_plan
                .iter()
                .map(|iv| TruthInterval {
                    start: config.start + TimeDelta::from_ms(iv.start_slot as i64 * dt.as_ms()),
                    end: config.start + TimeDelta::from_ms(iv.end_slot as i64 * dt.as_ms()),
                })
                .collect(),
        );

        // Channel seed derived by hashing seed || channel index.
        let mut seed_bytes = [0u8; 12];
        seed_bytes[0..8].copy_from_slice(&config.seed.to_le_bytes());
        seed_bytes[8..12].copy_from_slice(&(idx as u32).to_le_bytes());
        let mut rng = Rng::seed_from_u64(murmur3_u64(&seed_bytes, 0));

        let personal_tokens: Vec<[String; 2]> =
            (0..humans.len()).map(|_| [random_token(&mut rng), random_token(&mut rng)]).collect();
        let picker: Vec<usize> = (0..humans.len()).collect();
        let bot_counters = vec![0u64; bots.len()];
        channels.push(ChannelState {
            name,
            rng,
            humans,
            bots,
            personal_tokens,
            picker,
            words: Vec::with_capacity(16),
            bot_counters,
            intervals: channel_plan.clone(),
        });
    }

    let mut written: u64 = 0;
    let mut slot_buf: Vec<SlotMessage> = Vec::new();
    let mut line = String::with_capacity(160);
    for slot in 0..config.slots {
        slot_buf.clear();
        for (channel_idx, state) in channels.iter_mut().enumerate() {
            if state.in_broadcast(slot) {
                emit_broadcast_slot(config, &model, state, channel_idx, dt_secs, &mut slot_buf);
            } else {
                emit_idle_slot(config, &model, state, channel_idx, dt_secs, &mut slot_buf);
            }
        }
        slot_buf.sort_by_key(|m| m.offset_secs);
        let slot_start = config.start + TimeDelta::from_ms(slot as i64 * dt.as_ms());
        for msg in &slot_buf {
            let ts = slot_start + TimeDelta::from_secs(msg.offset_secs);
            let state = &channels[msg.channel_idx];
            let user = match msg.user {
                UserRef::Human(i) => &state.humans[i],
                UserRef::Bot(i) => &state.bots[i],
            };
            line.clear();
            line.push_str(&ts.to_string());
            line.push('\t');
            line.push_str(&state.name);
            line.push('\t');
            line.push_str(user);
            line.push('\t');
            line.push_str(&msg.text);
            line.push('\n');
            out.write_all(line.as_bytes())?;
            written += 1;
        }
    }

    Ok(Generated { truth, messages_written: written })
}

fn validate(config: &SynthConfig) -> Result<Vec<Vec<PlannedInterval>>, SynthError> {
    if config.channels == 0 {
        return Err(config_err("channels must be positive"));
    }
    if config.users_per_channel == 0 {
        return Err(config_err("users_per_channel must be positive"));
    }
    if config.slots == 0 {
        return Err(config_err("slots must be positive"));
    }
    if config.dt_minutes == 0 {
        return Err(config_err("dt_minutes must be positive"));
    }
    if !(0.0..=1.0).contains(&config.bot_fraction) {
        return Err(config_err("bot_fraction must lie in [0, 1]"));
    }
    if !(0.0..=1.0).contains(&config.volume_split) {
        return Err(config_err("volume_split must lie in [0, 1]"));
    }
    for (name, (lo, hi)) in [("volume_sub", config.volume_sub), ("volume_sup", config.volume_sup)] {
        if lo > hi {
            return Err(config_err(format!("{name} range is inverted")));
        }
    }
    if config.response.v_star == 0 {
        return Err(config_err("response.v_star must be positive"));
    }
    if config.response.tail_v <= config.response.v_star {
        return Err(config_err("response.tail_v must exceed v_star"));
    }
    let bots = ((config.users_per_channel as f64) * config.bot_fraction).round() as u32;
    if config.bot_fraction > 0.0 && bots == config.users_per_channel {
        return Err(config_err("bot_fraction leaves no human users"));
    }

    let plan: Vec<Vec<PlannedInterval>> = match &config.plan {
        PlanSpec::Explicit(plan) => {
            if plan.len() != config.channels as usize {
                return Err(config_err(format!(
                    "plan has {} channels, config has {}",
                    plan.len(),
                    config.channels
                )));
            }
            plan.clone()
        }
        PlanSpec::Regular { on_slots, off_slots, start_offset } => {
            if *on_slots == 0 {
                return Err(config_err("plan.on_slots must be positive"));
            }
            let mut per_channel = Vec::new();
            let mut intervals = Vec::new();
            let mut cursor = *start_offset;
            while cursor < config.slots {
                let end = (cursor + on_slots).min(config.slots);
                intervals.push(PlannedInterval { start_slot: cursor, end_slot: end });
                cursor = end + off_slots;
            }
            for _ in 0..config.channels {
                per_channel.push(intervals.clone());
            }
            per_channel
        }
    };

    for (idx, intervals) in plan.iter().enumerate() {
        let mut prev_end = 0u64;
        for (i, iv) in intervals.iter().enumerate() {
            if iv.start_slot >= iv.end_slot {
                return Err(config_err(format!("channel {idx} interval {i} is empty")));
            }
            if iv.end_slot > config.slots {
                return Err(config_err(format!("channel {idx} interval {i} exceeds duration")));
            }
            if i > 0 && iv.start_slot <= prev_end {
                return Err(config_err(format!("channel {idx} intervals overlap or touch")));
            }
            prev_end = iv.end_slot;
        }
    }
    Ok(plan)
}

fn emit_broadcast_slot(
    config: &SynthConfig,
    model: &BigramModel,
    state: &mut ChannelState,
    channel_idx: usize,
    dt_secs: i64,
    slot_buf: &mut Vec<SlotMessage>,
) {
    let ChannelState { rng, humans, bots, personal_tokens, picker, words, bot_counters, .. } =
        state;
    let (lo, hi) =
        if rng.chance(config.volume_split) { config.volume_sub } else { config.volume_sup };
    let v_target = rng.range_u64(lo, hi);

    // Bots first: fixed count at a regular cadence.
    let bot_total = bots.len() as u64 * config.bot_messages_per_slot as u64;
    for (bot_idx, bot_counter) in bot_counters.iter_mut().enumerate() {
        for j in 0..config.bot_messages_per_slot {
            let offset = (j as i64 * dt_secs / config.bot_messages_per_slot as i64
                + bot_idx as i64 * 17)
                % dt_secs;
            let counter = *bot_counter;
            *bot_counter += 1;
            let text = bot_text(config, rng, bot_idx, counter, model);
            slot_buf.push(SlotMessage {
                offset_secs: offset,
                channel_idx,
                user: UserRef::Bot(bot_idx),
                text,
            });
        }
    }

    let human_target = v_target.saturating_sub(bot_total);
    if human_target == 0 || humans.is_empty() {
        return;
    }
    let per_writer = config.response.output_at(v_target);
    let writers = ((human_target as f64 / per_writer).round() as usize).clamp(1, humans.len());
    let lambda = human_target as f64 / writers as f64;

    rng.partial_shuffle(picker, writers);
    for &human_idx in picker.iter().take(writers) {
        let count = rng.poisson(lambda);
        for _ in 0..count {
            let offset = rng.range_u64(0, dt_secs as u64 - 1) as i64;
            let text = human_text(config, rng, humans, &personal_tokens[human_idx], words, model);
            slot_buf.push(SlotMessage {
                offset_secs: offset,
                channel_idx,
                user: UserRef::Human(human_idx),
                text,
            });
        }
    }
}

fn emit_idle_slot(
    config: &SynthConfig,
    model: &BigramModel,
    state: &mut ChannelState,
    channel_idx: usize,
    dt_secs: i64,
    slot_buf: &mut Vec<SlotMessage>,
) {
    let ChannelState { rng, humans, personal_tokens, words, .. } = state;
    if humans.is_empty() {
        return;
    }
    let count = rng.poisson(config.off_rate);
    for _ in 0..count {
        let offset = rng.range_u64(0, dt_secs as u64 - 1) as i64;
        let human_idx = rng.range_usize(0, humans.len() - 1);
        let text = human_text(config, rng, humans, &personal_tokens[human_idx], words, model);
        slot_buf.push(SlotMessage {
            offset_secs: offset,
            channel_idx,
            user: UserRef::Human(human_idx),
            text,
        });
    }
}

fn random_token(rng: &mut Rng) -> String {
    (0..rng.range_usize(4, 7)).map(|_| (b'a' + rng.range_u64(0, 25) as u8) as char).collect()
}

/// Appends `word` with an occasional spelling mutation. Mutations break the
/// verbatim phrase repeats a narrow bigram model would otherwise hand to
/// the compressor.
fn push_word(out: &mut String, word: &str, rng: &mut Rng, mutation_rate: f64) {
    if !rng.chance(mutation_rate) {
        out.push_str(word);
        return;
    }
    match rng.range_u64(0, 5) {
        // Elongated letter: "niiice".
        0 => {
            let pos = rng.range_usize(0, word.len().saturating_sub(1));
            for (i, c) in word.chars().enumerate() {
                out.push(c);
                if i == pos {
                    for _ in 0..rng.range_usize(1, 3) {
                        out.push(c);
                    }
                }
            }
        }
        // Shouting case.
        1 => out.extend(word.chars().flat_map(char::to_uppercase)),
        // Adjacent transposition typo.
        2 => {
            let chars: Vec<char> = word.chars().collect();
            if chars.len() < 2 {
                out.push_str(word);
                return;
            }
            let pos = rng.range_usize(0, chars.len() - 2);
            for (i, &c) in chars.iter().enumerate() {
                if i == pos {
                    out.push(chars[pos + 1]);
                } else if i == pos + 1 {
                    out.push(chars[pos]);
                } else {
                    out.push(c);
                }
            }
        }
        // Random letter inserted somewhere.
        3 => {
            let pos = rng.range_usize(0, word.len());
            for (i, c) in word.chars().enumerate() {
                if i == pos {
                    out.push((b'a' + rng.range_u64(0, 25) as u8) as char);
                }
                out.push(c);
            }
            if pos == word.len() {
                out.push((b'a' + rng.range_u64(0, 25) as u8) as char);
            }
        }
        // Random letter substitution.
        4 => {
            let chars: Vec<char> = word.chars().collect();
            let pos = rng.range_usize(0, chars.len() - 1);
            for (i, &c) in chars.iter().enumerate() {
                if i == pos {
                    out.push((b'a' + rng.range_u64(0, 25) as u8) as char);
                } else {
                    out.push(c);
                }
            }
        }
        // Emphatic suffix.
        _ => {
            out.push_str(word);
            out.push_str(["s", "er", "ed", "y", "!!"][rng.range_usize(0, 4)]);
        }
    }
}

fn human_text(
    config: &SynthConfig,
    rng: &mut Rng,
    humans: &[String],
    personal: &[String; 2],
    words: &mut Vec<&'static str>,
    model: &BigramModel,
) -> String {
    let spec = &config.text;
    let mut out = String::with_capacity(64);
    if rng.chance(spec.marker_rate) {
        out.push_str(DEFAULT_MARKERS[rng.range_usize(0, DEFAULT_MARKERS.len() - 1)]);
        out.push(' ');
    }
    if rng.chance(spec.mention_rate) {
        out.push('@');
        out.push_str(&humans[rng.range_usize(0, humans.len() - 1)]);
        out.push(' ');
    }
    match spec.human_entropy {
        Entropy::High => {
            words.clear();
            let n_words = rng.range_usize(2, 8);
            model.walk(rng, n_words, spec.word_salad_rate, words);
            for (i, word) in words.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                push_word(&mut out, word, rng, spec.mutation_rate);
            }
        }
        Entropy::Low => {
            out.push_str(SEED_SENTENCES[rng.range_usize(0, 2)]);
        }
    }
    if rng.chance(spec.personal_rate) {
        out.push(' ');
        out.push_str(&personal[rng.range_usize(0, 1)]);
    }
    if rng.chance(spec.number_rate) {
        out.push(' ');
        match rng.range_u64(0, 3) {
            0 => out.push_str(&rng.range_u64(0, 99_999).to_string()),
            1 => out.push_str(&format!("{}:{:02}", rng.range_u64(0, 59), rng.range_u64(0, 59))),
            2 => out.push_str(&format!("{}-{}", rng.range_u64(0, 99), rng.range_u64(0, 99))),
            _ => out.push_str(&format!("#{}", rng.range_u64(1, 9_999))),
        }
    }
    if rng.chance(0.06) {
        const GARNISH: &[char] = &['é', 'ñ', 'ü', 'ß', 'λ', '♥', '→', '°', '¿', '🔥'];
        out.push(' ');
        out.push(GARNISH[rng.range_usize(0, GARNISH.len() - 1)]);
    }
    if rng.chance(spec.gibberish_rate) {
        out.push(' ');
        for _ in 0..rng.range_usize(5, 12) {
            out.push((b'a' + rng.range_u64(0, 25) as u8) as char);
        }
    }
    if rng.chance(spec.question_rate) {
        out.push('?');
    }
    if rng.chance(spec.emote_rate) {
        // Emotes often arrive in pasted combos, sometimes with no separator.
        let combo = rng.range_usize(1, 3);
        for i in 0..combo {
            if i == 0 || rng.chance(0.6) {
                out.push(' ');
            }
            let emote = BUILTIN_EMOTES[rng.range_usize(0, BUILTIN_EMOTES.len() - 1)];
            out.push_str(emote);
        }
    }
    out
}

fn bot_text(
    config: &SynthConfig,
    rng: &mut Rng,
    bot_idx: usize,
    counter: u64,
    model: &BigramModel,
) -> String {
    match config.text.bot_entropy {
        Entropy::Low => {
            let template = BOT_TEMPLATES[bot_idx % BOT_TEMPLATES.len()];
            format!("{template} [{}]", counter % 4)
        }
        Entropy::High => {
            let mut words = Vec::with_capacity(8);
            model.walk(rng, 8, config.text.word_salad_rate, &mut words);
            words.join(" ")
        }
    }
}
