//! Stage composition: broadcasts, bot labels, chunk metrics, and phase
//! analysis over ingested channel streams.
//!
//! Each stage is a standalone function over immutable inputs so the CLI can
//! run them individually with results identical to a full run. Channels are
//! independent; stages fan out per channel when `workers > 1` and always
//! merge in channel order, so output never depends on scheduling.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::botfilter::{self, BotLabel, UserFeatures};
use crate::chatlog::{AnonId, ChannelStream};
use crate::metrics::{chunk_stream, ChunkMetrics, EmoteLexicon, MarkerLexicon, MetricsComputer};
use crate::phases::{
    self, BinSpec, ChannelFilter, ChunkObs, ConditionalCurve, FitConfig, PhasesError,
    QuartileCurve, ResponseCurve, SlopePair,
};
use crate::segmenter::{self, BroadcastInterval};
use crate::time::{TimeDelta, Timestamp};

/// Full pipeline configuration; defaults follow the reference analysis
/// (5-minute windows, 60-minute merge gap, 0.44 retention threshold,
/// 1000/100/2 channel filter, threshold 40, bound 200).
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub dt: TimeDelta,
    pub merge_gap: TimeDelta,
    pub session_timeout: TimeDelta,
    pub rho_threshold: f64,
    pub channel_filter: ChannelFilter,
    pub fit: FitConfig,
    pub bins: BinSpec,
    /// Analyze all chunks instead of only those inside detected broadcasts.
    pub include_offline: bool,
    /// Worker threads for per-channel stages; 1 means fully sequential.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dt: TimeDelta::from_minutes(5),
            merge_gap: TimeDelta::from_minutes(60),
            session_timeout: botfilter::DEFAULT_SESSION_TIMEOUT,
            rho_threshold: botfilter::DEFAULT_RHO_THRESHOLD,
            channel_filter: ChannelFilter::default(),
            fit: FitConfig::default(),
            bins: BinSpec::default(),
            include_offline: false,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChannelBroadcasts {
    pub channel_id: AnonId,
    pub intervals: Vec<BroadcastInterval>,
}

/// Detects broadcast intervals for every channel; output in channel order.
pub fn detect_all_broadcasts(
    streams: &[ChannelStream],
    config: &PipelineConfig,
) -> Vec<ChannelBroadcasts> {
    let detect = |stream: &ChannelStream| ChannelBroadcasts {
        channel_id: stream.channel_id,
        intervals: segmenter::channel_broadcasts(stream, config.dt, config.merge_gap)
            .unwrap_or_default(),
    };
    if config.workers > 1 {
        streams.par_iter().map(detect).collect()
    } else {
        streams.iter().map(detect).collect()
    }
}

#[derive(Debug, Clone)]
pub struct LabeledUser {
    pub features: UserFeatures,
    pub label: BotLabel,
}

/// Extracts per-user features and applies the retention rule; output sorted
/// by user id.
pub fn label_users(streams: &[ChannelStream], config: &PipelineConfig) -> Vec<LabeledUser> {
    botfilter::user_features(streams, config.session_timeout)
        .into_iter()
        .map(|features| {
            let label = botfilter::classify(&features, config.rho_threshold);
            LabeledUser { features, label }
        })
        .collect()
}

pub fn bot_ids(labeled: &[LabeledUser]) -> HashSet<AnonId> {
    labeled.iter().filter(|u| u.label == BotLabel::Bot).map(|u| u.features.user_id).collect()
}

/// One chunk row of the metrics artifact. `metrics` is absent for windows
/// where only bots spoke.
#[derive(Debug, Clone)]
pub struct ChunkRow {
    pub channel_id: AnonId,
    pub t_start: Timestamp,
    pub volume: u64,
    pub users: u64,
    pub metrics: Option<ChunkMetrics>,
}

/// Raw full-window channel totals (bots included), used by the channel
/// filter and the quartile split.
#[derive(Debug, Clone, Copy)]
pub struct ChannelSummary {
    pub channel_id: AnonId,
    pub messages: u64,
    pub users: u64,
}

/// One non-bot author's message count within one chunk.
#[derive(Debug, Clone, Copy)]
pub struct UserObs {
    pub channel_id: AnonId,
    pub user_id: AnonId,
    pub volume: u64,
    pub count: u32,
}

#[derive(Debug, Clone, Default)]
pub struct MetricsOutput {
    /// Analyzed chunks in (channel, time) order.
    pub rows: Vec<ChunkRow>,
    /// Per-user per-chunk output observations backing the response curves.
    pub user_obs: Vec<UserObs>,
    pub summaries: Vec<ChannelSummary>,
    /// Total chunks before the broadcast restriction.
    pub chunks_total: u64,
}

/// Chunks every channel, restricts to broadcast periods (unless configured
/// otherwise), and computes the metric vector per chunk.
pub fn compute_chunk_metrics(
    streams: &[ChannelStream],
    bots: &HashSet<AnonId>,
    broadcasts: &[ChannelBroadcasts],
    emotes: &EmoteLexicon,
    markers: &MarkerLexicon,
    config: &PipelineConfig,
) -> MetricsOutput {
    let intervals_by_channel: HashMap<AnonId, &[BroadcastInterval]> =
        broadcasts.iter().map(|b| (b.channel_id, b.intervals.as_slice())).collect();

    struct ChannelResult {
        rows: Vec<ChunkRow>,
        user_obs: Vec<UserObs>,
        summary: ChannelSummary,
        chunks_total: u64,
    }

    let analyze_channel = |stream: &ChannelStream| -> ChannelResult {
        let mut computer = MetricsComputer::new(emotes, markers);
        let chunks = chunk_stream(stream, bots, config.dt);
        let chunks_total = chunks.len() as u64;
        let empty: &[BroadcastInterval] = &[];
        let intervals = intervals_by_channel.get(&stream.channel_id).copied().unwrap_or(empty);

        let mut rows = Vec::new();
        let mut user_obs = Vec::new();
        for chunk in &chunks {
            let in_broadcast = intervals.iter().any(|iv| iv.contains(chunk.t_start));
            if !config.include_offline && !in_broadcast {
                continue;
            }
            rows.push(ChunkRow {
                channel_id: chunk.channel_id,
                t_start: chunk.t_start,
                volume: chunk.volume,
                users: chunk.user_count(),
                metrics: computer.compute(chunk),
            });
            let mut authors: Vec<(&AnonId, &u32)> = chunk.per_user_counts.iter().collect();
            authors.sort_by_key(|(id, _)| **id);
            for (user_id, count) in authors {
                user_obs.push(UserObs {
                    channel_id: chunk.channel_id,
                    user_id: *user_id,
                    volume: chunk.volume,
                    count: *count,
                });
            }
        }

        let mut distinct_users: HashSet<AnonId> = HashSet::new();
        for msg in &stream.messages {
            distinct_users.insert(msg.user_id);
        }
        ChannelResult {
            rows,
            user_obs,
            summary: ChannelSummary {
                channel_id: stream.channel_id,
                messages: stream.messages.len() as u64,
                users: distinct_users.len() as u64,
            },
            chunks_total,
        }
    };

    let results: Vec<ChannelResult> = if config.workers > 1 {
        streams.par_iter().map(analyze_channel).collect()
    } else {
        streams.iter().map(analyze_channel).collect()
    };

    let mut out = MetricsOutput::default();
    for result in results {
        out.rows.extend(result.rows);
        out.user_obs.extend(result.user_obs);
        out.summaries.push(result.summary);
        out.chunks_total += result.chunks_total;
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct PhasesOutput {
    pub curve: Option<ConditionalCurve>,
    pub peak: Option<u64>,
    pub slopes: Vec<(AnonId, SlopePair)>,
    /// Users skipped because one regression side had zero variance.
    pub degenerate_users: u64,
    pub channels_analyzed: u64,
    /// Chunks feeding the conditional curve (qualifying channels, author
    /// floor applied).
    pub curve_chunks: u64,
}

/// Aggregate curve, threshold estimate, and per-user slope pairs. Channels
/// must clear the full-window filter; per-user fits use all their chunks in
/// qualifying channels regardless of the chunk author floor.
pub fn compute_phases(metrics: &MetricsOutput, config: &PipelineConfig) -> PhasesOutput {
    let filter = &config.channel_filter;
    let qualifying: HashSet<AnonId> = metrics
        .summaries
        .iter()
        .filter(|s| s.messages >= filter.min_messages && s.users >= filter.min_users)
        .map(|s| s.channel_id)
        .collect();

    let observations: Vec<ChunkObs> = metrics
        .rows
        .iter()
        .filter(|row| qualifying.contains(&row.channel_id))
        .filter_map(|row| {
            row.metrics.map(|m| ChunkObs {
                channel_id: row.channel_id,
                volume: row.volume,
                user_count: row.users,
                messages_per_user: m.messages_per_user,
            })
        })
        .collect();

    let curve =
        phases::conditional_median(&observations, &config.bins, filter.min_chunk_users).ok();
    let peak = curve.as_ref().and_then(|c| phases::peak_estimate(c).ok());
    let curve_chunks =
        observations.iter().filter(|o| o.user_count >= filter.min_chunk_users).count() as u64;

    let curves: Vec<ResponseCurve> = phases::collect_response_curves(
        metrics
            .user_obs
            .iter()
            .filter(|o| qualifying.contains(&o.channel_id))
            .map(|o| (o.user_id, o.volume, o.count)),
    );
    let mut slopes = Vec::new();
    let mut degenerate_users = 0u64;
    for curve in &curves {
        match phases::fit_slopes(curve, &config.fit) {
            Ok(Some(pair)) => slopes.push((curve.user_id, pair)),
            Ok(None) => {}
            Err(PhasesError::DegenerateVariance { .. }) => degenerate_users += 1,
            Err(PhasesError::NoData) => {}
        }
    }

    PhasesOutput {
        curve,
        peak,
        slopes,
        degenerate_users,
        channels_analyzed: qualifying.len() as u64,
        curve_chunks,
    }
}

/// Quartile breakdown of the conditional curve by channel popularity,
/// using a stricter author floor per chunk.
pub fn compute_quartiles(
    metrics: &MetricsOutput,
    config: &PipelineConfig,
) -> Result<Vec<QuartileCurve>, PhasesError> {
    let filter = &config.channel_filter;
    let qualifying: HashMap<AnonId, u64> = metrics
        .summaries
        .iter()
        .filter(|s| s.messages >= filter.min_messages && s.users >= filter.min_users)
        .map(|s| (s.channel_id, s.users))
        .collect();
    let observations: Vec<ChunkObs> = metrics
        .rows
        .iter()
        .filter(|row| qualifying.contains_key(&row.channel_id))
        .filter_map(|row| {
            row.metrics.map(|m| ChunkObs {
                channel_id: row.channel_id,
                volume: row.volume,
                user_count: row.users,
                messages_per_user: m.messages_per_user,
            })
        })
        .collect();
    phases::quartile_curves(&observations, &qualifying, &config.bins, filter.min_chunk_users + 1)
}

/// Runs a closure inside a rayon pool of the configured width. With one
/// worker the closure runs on the calling thread.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers <= 1 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool construction")
        .install(f)
}
