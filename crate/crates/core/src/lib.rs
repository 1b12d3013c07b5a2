//! Streaming chat-log analytics for group-conversation load.
//!
//! The pipeline ingests anonymized chat logs, detects live-broadcast
//! periods from volume structure, removes bot accounts by text
//! compressibility, computes per-window structural and textual metrics,
//! and classifies each user's response curve into conversation-like or
//! overload-like regimes.
//!
//! Modules follow the stage order:
//!
//! * [`chatlog`]: parsing, anonymization, per-channel streams
//! * [`segmenter`]: broadcast detection from volume series
//! * [`botfilter`]: per-user compressibility features and the retention rule
//! * [`metrics`]: per-window metric vectors
//! * [`phases`]: conditional curves and per-user slope pairs
//! * [`synthgen`]: synthetic corpora with planted ground truth
//! * [`pipeline`]: stage composition shared by the CLI and tests

pub mod botfilter;
pub mod chatlog;
pub mod compress;
pub mod hash;
pub mod metrics;
pub mod phases;
pub mod pipeline;
pub mod rng;
pub mod segmenter;
pub mod shingle;
pub mod synthgen;
pub mod time;

pub use botfilter::{BotLabel, UserFeatures};
pub use chatlog::{
    anonymize, ingest, parse_line, AnonId, ChannelStream, ChatMessage, IngestOptions, IngestReport,
    LogFormat, ParseError, RawMessage,
};
pub use metrics::{Chunk, ChunkMetrics, EmoteLexicon, MarkerLexicon};
pub use phases::{ChannelFilter, ConditionalCurve, Quadrant, ResponseCurve, SlopePair};
pub use pipeline::PipelineConfig;
pub use segmenter::BroadcastInterval;
pub use synthgen::{GroundTruth, SynthConfig};
pub use time::{TimeDelta, Timestamp};
