//! Per-window chunking and the overload metric vector.
//!
//! A chunk holds all messages of one channel inside one grid window. The
//! window volume `V` counts every message, bot traffic included, because
//! bot output still loads the readers; the author set `U`, the message list
//! and every textual metric exclude bot accounts.
//!
//! Metrics per chunk: messages per user, mean message length (Unicode
//! scalar values), fraction of messages ending in `?`, fraction containing
//! an `@`-mention, discourse-marker token share, emote shingle share, and
//! the DEFLATE block compression ratio.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, AhoCorasickKind};
use thiserror::Error;

use crate::chatlog::{AnonId, ChannelStream, ChatMessage};
use crate::compress::{deflate_ratio, Deflater};
use crate::shingle::SubstringCounter;
use crate::time::{TimeDelta, Timestamp};

pub const DEFAULT_DT: TimeDelta = TimeDelta::from_minutes(5);

/// Hard cap on emote code length; it also bounds the shingle lengths the
/// emote metric has to enumerate.
pub const MAX_EMOTE_LEN: usize = 24;

/// Starter discourse-marker list; fully overridable from a lexicon file.
pub const DEFAULT_MARKERS: &[&str] =
    &["oh", "well", "of course", "you know", "i mean", "so", "actually", "anyway", "like", "now"];

/// Bundled emote codes used when no lexicon file is supplied; real analyses
/// should pass the platform's full list.
pub const DEFAULT_EMOTES: &[&str] = &[
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
    ":)",
    ":(",
    ":D",
    "<3",
];

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon is empty")]
    Empty,
    #[error("lexicon entry {entry:?} exceeds {max} characters")]
    EntryTooLong { entry: String, max: usize },
    #[error("i/o error reading lexicon: {0}")]
    Io(#[from] std::io::Error),
}

/// Set of emote codes. Matching is exact and case sensitive, as emote codes
/// are case-sensitive identifiers on chat platforms.
#[derive(Debug, Clone)]
pub struct EmoteLexicon {
    entries: Vec<String>,
    max_len: usize,
    matcher: AhoCorasick,
}

impl EmoteLexicon {
    /// Builds a lexicon; entries are deduplicated. Every entry must be
    /// between 1 and [`MAX_EMOTE_LEN`] characters.
    pub fn new<I, S>(entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = entries.into_iter().map(Into::into).collect();
        let entries: Vec<String> = set.into_iter().filter(|e| !e.is_empty()).collect();
        if entries.is_empty() {
            return Err(LexiconError::Empty);
        }
        let mut max_len = 0;
        for entry in &entries {
            let chars = entry.chars().count();
            if chars > MAX_EMOTE_LEN {
                return Err(LexiconError::EntryTooLong {
                    entry: entry.clone(),
                    max: MAX_EMOTE_LEN,
                });
            }
            max_len = max_len.max(chars);
        }
        // DFA scanning is markedly faster and emote lexicons are small
        // enough (tens of thousands of short codes) for its memory cost.
        let matcher = AhoCorasickBuilder::new()
            .kind(Some(AhoCorasickKind::DFA))
            .build(&entries)
            .unwrap_or_else(|_| AhoCorasick::new(&entries).expect("bounded pattern set"));
        Ok(EmoteLexicon { entries, max_len, matcher })
    }

    /// One emote code per line, UTF-8; blank lines are ignored.
    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path)?;
        let mut entries = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            let trimmed = line.trim_end_matches('\r');
            if !trimmed.is_empty() {
                entries.push(trimmed.to_string());
            }
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    /// Longest entry in characters; the shingle length bound.
    pub fn max_len(&self) -> usize {
        self.max_len
    }
}

/// Lowercase marker words and phrases, matched greedily over
/// whitespace-split tokens.
#[derive(Debug, Clone)]
pub struct MarkerLexicon {
    phrases: HashSet<String>,
    max_words: usize,
}

impl MarkerLexicon {
    pub fn new<I, S>(phrases: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let phrases: HashSet<String> = phrases
            .into_iter()
            .map(|p| p.into().to_lowercase())
            .filter(|p| !p.trim().is_empty())
            .collect();
        if phrases.is_empty() {
            return Err(LexiconError::Empty);
        }
        let max_words = phrases.iter().map(|p| p.split_whitespace().count()).max().unwrap_or(1);
        Ok(MarkerLexicon { phrases, max_words })
    }

    pub fn default_markers() -> Self {
        Self::new(DEFAULT_MARKERS.iter().copied()).expect("builtin list is non-empty")
    }

    /// One lowercase phrase per line; blank lines are ignored.
    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path)?;
        let mut phrases = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                phrases.push(trimmed.to_string());
            }
        }
        Self::new(phrases)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

/// All messages of one channel in one `dt` window.
#[derive(Debug, Clone)]
pub struct Chunk<'a> {
    pub channel_id: AnonId,
    /// Window start on the epoch-aligned `dt` grid.
    pub t_start: Timestamp,
    /// Total message count in the window, bot authors included.
    pub volume: u64,
    /// Non-bot messages, in stream order.
    pub messages: Vec<&'a ChatMessage>,
    /// Message count per non-bot author.
    pub per_user_counts: HashMap<AnonId, u32>,
}

impl Chunk<'_> {
    /// Distinct non-bot authors in the window.
    pub fn user_count(&self) -> u64 {
        self.per_user_counts.len() as u64
    }
}

/// Splits a stream into chunks on the `dt` grid. Windows without messages
/// yield no chunk. `bots` are excluded from the message list and author
/// counts but still counted in `volume`.
pub fn chunk_stream<'a>(
    stream: &'a ChannelStream,
    bots: &HashSet<AnonId>,
    dt: TimeDelta,
) -> Vec<Chunk<'a>> {
    assert!(dt.is_positive(), "dt must be positive");
    let mut chunks: Vec<Chunk<'a>> = Vec::new();
    for msg in &stream.messages {
        let t_start = msg.timestamp.floor_to(dt);
        let need_new = chunks.last().is_none_or(|c| c.t_start != t_start);
        if need_new {
            chunks.push(Chunk {
                channel_id: stream.channel_id,
                t_start,
                volume: 0,
                messages: Vec::new(),
                per_user_counts: HashMap::new(),
            });
        }
        let chunk = chunks.last_mut().expect("just pushed");
        chunk.volume += 1;
        if !bots.contains(&msg.user_id) {
            chunk.messages.push(msg);
            *chunk.per_user_counts.entry(msg.user_id).or_insert(0) += 1;
        }
    }
    chunks
}

/// Non-bot messages per distinct author; `None` for a window where only
/// bots spoke. At least 1 by construction.
pub fn messages_per_user(chunk: &Chunk) -> Option<f64> {
    let users = chunk.user_count();
    (users > 0).then(|| chunk.messages.len() as f64 / users as f64)
}

/// Mean message length in Unicode scalar values; `None` without messages.
pub fn mean_length(chunk: &Chunk) -> Option<f64> {
    if chunk.messages.is_empty() {
        return None;
    }
    let total: usize = chunk.messages.iter().map(|m| m.text.chars().count()).sum();
    Some(total as f64 / chunk.messages.len() as f64)
}

/// Fraction of messages that end with `?` after trailing whitespace strip.
pub fn question_fraction(chunk: &Chunk) -> f64 {
    fraction_of_messages(chunk, |text| text.trim_end().ends_with('?'))
}

/// Fraction of messages containing a token that starts with `@` followed by
/// at least one word character. Counted once per message.
pub fn mention_fraction(chunk: &Chunk) -> f64 {
    fraction_of_messages(chunk, |text| {
        text.split_whitespace().any(|token| {
            token.strip_prefix('@').is_some_and(|rest| {
                rest.chars().next().is_some_and(|c| c.is_alphanumeric() || c == '_')
            })
        })
    })
}

fn fraction_of_messages(chunk: &Chunk, pred: impl Fn(&str) -> bool) -> f64 {
    if chunk.messages.is_empty() {
        return 0.0;
    }
    let hits = chunk.messages.iter().filter(|m| pred(&m.text)).count();
    hits as f64 / chunk.messages.len() as f64
}

/// Reusable buffers for marker matching: the lowercased message, token byte
/// spans within it, and the candidate phrase under test.
#[derive(Default)]
struct MarkerScratch {
    lowered: String,
    spans: Vec<(u32, u32)>,
    candidate: String,
}

/// Share of whitespace-split lowercase tokens consumed by marker phrases.
/// Matching is greedy longest-first; an n-word phrase consumes n tokens.
/// Zero tokens yield 0 by convention.
pub fn marker_fraction(chunk: &Chunk, lexicon: &MarkerLexicon) -> f64 {
    marker_fraction_with(chunk, lexicon, &mut MarkerScratch::default())
}

fn marker_fraction_with(
    chunk: &Chunk,
    lexicon: &MarkerLexicon,
    scratch: &mut MarkerScratch,
) -> f64 {
    let mut total: u64 = 0;
    let mut matched: u64 = 0;
    for msg in &chunk.messages {
        scratch.lowered.clear();
        if msg.text.is_ascii() {
            scratch.lowered.push_str(&msg.text);
            // In-place ASCII lowering vectorizes; the char-wise path is the
            // slow fallback for non-ASCII text.
            scratch.lowered.make_ascii_lowercase();
        } else {
            scratch.lowered.extend(msg.text.chars().flat_map(char::to_lowercase));
        }
        scratch.spans.clear();
        let mut token_start: Option<usize> = None;
        for (i, c) in scratch.lowered.char_indices() {
            if c.is_whitespace() {
                if let Some(start) = token_start.take() {
                    scratch.spans.push((start as u32, i as u32));
                }
            } else if token_start.is_none() {
                token_start = Some(i);
            }
        }
        if let Some(start) = token_start {
            scratch.spans.push((start as u32, scratch.lowered.len() as u32));
        }

        total += scratch.spans.len() as u64;
        let mut i = 0;
        while i < scratch.spans.len() {
            let mut advanced = false;
            let longest = lexicon.max_words.min(scratch.spans.len() - i);
            for len in (1..=longest).rev() {
                scratch.candidate.clear();
                for (j, &(a, b)) in scratch.spans[i..i + len].iter().enumerate() {
                    if j > 0 {
                        scratch.candidate.push(' ');
                    }
                    scratch.candidate.push_str(&scratch.lowered[a as usize..b as usize]);
                }
                if lexicon.phrases.contains(&scratch.candidate) {
                    matched += len as u64;
                    i += len;
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                i += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        matched as f64 / total as f64
    }
}

/// All distinct substrings of `text` with length `1..=k_max`, in characters.
///
/// Reference enumeration used by tests and small-scale callers; the chunk
/// metric path counts the same set through [`SubstringCounter`] without
/// materializing it.
pub fn shingle_set(text: &str, k_max: usize) -> HashSet<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut set = HashSet::new();
    for i in 0..chars.len() {
        for len in 1..=k_max.min(chars.len() - i) {
            set.insert(chars[i..i + len].iter().collect());
        }
    }
    set
}

/// Share of the chunk's distinct shingles that are emote codes: shingle
/// sets are computed per message with lengths up to the lexicon's longest
/// entry, unioned across the chunk, and intersected with the lexicon.
/// Zero shingles yield 0.
pub fn emote_fraction(chunk: &Chunk, lexicon: &EmoteLexicon) -> f64 {
    let mut scratch = EmoteScratch::new(lexicon);
    scratch.fraction(chunk.messages.iter().map(|m| m.text.as_str()), lexicon)
}

/// DEFLATE ratio of the chunk's non-bot messages joined by `\n`; same
/// procedure and clamping as the per-user bot feature. `None` without
/// messages.
pub fn block_compression(chunk: &Chunk) -> Option<f64> {
    let mut buf = Vec::new();
    join_messages(&mut buf, chunk.messages.iter().map(|m| m.text.as_str()));
    deflate_ratio(&buf)
}

fn join_messages<'a>(buf: &mut Vec<u8>, texts: impl Iterator<Item = &'a str>) {
    for (i, text) in texts.enumerate() {
        if i > 0 {
            buf.push(b'\n');
        }
        buf.extend_from_slice(text.as_bytes());
    }
}

/// The metric vector of one chunk. Present only for chunks with at least
/// one non-bot message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkMetrics {
    pub messages_per_user: f64,
    pub mean_length: f64,
    pub question_fraction: f64,
    pub mention_fraction: f64,
    pub marker_fraction: f64,
    pub emote_fraction: f64,
    pub compression_ratio: f64,
}

/// Reusable emote-metric state: the shingle counter plus a generation-
/// stamped seen set for matched patterns.
struct EmoteScratch {
    counter: SubstringCounter,
    seen: Vec<u32>,
    generation: u32,
}

impl EmoteScratch {
    fn new(lexicon: &EmoteLexicon) -> Self {
        EmoteScratch {
            counter: SubstringCounter::new(),
            seen: vec![0; lexicon.entries.len()],
            generation: 0,
        }
    }

    fn fraction<'a>(
        &mut self,
        texts: impl Iterator<Item = &'a str> + Clone,
        lexicon: &EmoteLexicon,
    ) -> f64 {
        self.counter.clear();
        self.generation += 1;
        let mut matched: u64 = 0;
        for text in texts {
            self.counter.insert(text);
            for m in lexicon.matcher.find_overlapping_iter(text) {
                let idx = m.pattern().as_usize();
                if self.seen[idx] != self.generation {
                    self.seen[idx] = self.generation;
                    matched += 1;
                }
            }
        }
        let distinct = self.counter.distinct_up_to(lexicon.max_len);
        if distinct == 0 {
            0.0
        } else {
            matched as f64 / distinct as f64
        }
    }
}

/// Computes full metric vectors, reusing buffers across chunks. One
/// computer per worker thread.
pub struct MetricsComputer<'l> {
    emotes: &'l EmoteLexicon,
    markers: &'l MarkerLexicon,
    scratch: EmoteScratch,
    marker_scratch: MarkerScratch,
    deflater: Deflater,
    join_buf: Vec<u8>,
}

impl<'l> MetricsComputer<'l> {
    pub fn new(emotes: &'l EmoteLexicon, markers: &'l MarkerLexicon) -> Self {
        MetricsComputer {
            emotes,
            markers,
            scratch: EmoteScratch::new(emotes),
            marker_scratch: MarkerScratch::default(),
            deflater: Deflater::new(),
            join_buf: Vec::new(),
        }
    }

    /// `None` for chunks without non-bot messages.
    pub fn compute(&mut self, chunk: &Chunk) -> Option<ChunkMetrics> {
        let messages_per_user = messages_per_user(chunk)?;
        self.join_buf.clear();
        join_messages(&mut self.join_buf, chunk.messages.iter().map(|m| m.text.as_str()));
        let compression_ratio =
            self.deflater.deflate_ratio(&self.join_buf).expect("non-empty text");
        Some(ChunkMetrics {
            messages_per_user,
            mean_length: mean_length(chunk).expect("non-empty chunk"),
            question_fraction: question_fraction(chunk),
            mention_fraction: mention_fraction(chunk),
            marker_fraction: marker_fraction_with(chunk, self.markers, &mut self.marker_scratch),
            emote_fraction: self
                .scratch
                .fraction(chunk.messages.iter().map(|m| m.text.as_str()), self.emotes),
            compression_ratio,
        })
    }
}
