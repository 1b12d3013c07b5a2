//! `cacophony`: chat-log overload analysis pipeline.
//!
//! Subcommands mirror the pipeline stages (`ingest`, `broadcasts`, `bots`,
//! `metrics`, `phases`) plus `run` for the whole pipeline, `simulate` for
//! synthetic corpora with ground truth, and `report` for plot-ready tables.
//! Stage subcommands read the raw corpus and recompute their inputs through
//! the same code path as `run`, so their artifacts are byte-identical to a
//! full run.

mod artifacts;
mod commands;

use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use cacophony_core::chatlog::LogFormat;
use cacophony_core::phases::{ChannelFilter, FitConfig};
use cacophony_core::pipeline::PipelineConfig;
use cacophony_core::time::TimeDelta;

#[derive(Parser)]
#[command(name = "cacophony", version, about = "Chat-log overload analysis pipeline")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// Anonymization salt as hex bytes; identical salt gives identical ids.
    #[arg(long, global = true, env = "CACOPHONY_SALT", default_value = "")]
    salt: String,

    /// Input wire format.
    #[arg(long, global = true, default_value = "tsv")]
    format: String,

    /// Window size in minutes.
    #[arg(long, global = true, default_value_t = 5)]
    dt: u32,

    /// Merge gap between broadcasts, in minutes.
    #[arg(long = "merge-gap", global = true, default_value_t = 60)]
    merge_gap: u32,

    /// Retention threshold on the per-user compression ratio.
    #[arg(long = "rho-threshold", global = true, default_value_t = 0.44)]
    rho_threshold: f64,

    /// Session timeout for the inter-message-time feature, in seconds.
    #[arg(long = "session-timeout", global = true, default_value_t = 3600)]
    session_timeout: u64,

    /// Worker threads for per-channel stages (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Emote lexicon file, one code per line; bundled list when omitted.
    #[arg(long, global = true)]
    emotes: Option<PathBuf>,

    /// Discourse-marker lexicon file, one lowercase phrase per line.
    #[arg(long, global = true)]
    markers: Option<PathBuf>,

    /// Channel floor: messages over the full window.
    #[arg(long = "min-messages", global = true, default_value_t = 1000)]
    min_messages: u64,

    /// Channel floor: distinct users over the full window.
    #[arg(long = "min-users", global = true, default_value_t = 100)]
    min_users: u64,

    /// Chunk floor: distinct non-bot authors.
    #[arg(long = "min-chunk-users", global = true, default_value_t = 2)]
    min_chunk_users: u64,

    /// Overload threshold volume.
    #[arg(long = "v-star", global = true, default_value_t = 40)]
    v_star: u64,

    /// Upper volume bound (exclusive) for the supra-threshold fit.
    #[arg(long = "v-max", global = true, default_value_t = 200)]
    v_max: u64,

    /// Minimum observations per regression side.
    #[arg(long = "min-obs", global = true, default_value_t = 10)]
    min_obs: usize,

    /// Analyze all windows instead of only detected broadcast periods.
    #[arg(long = "include-offline", global = true)]
    include_offline: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, anonymize, and normalize a corpus into messages.tsv.
    Ingest(InOut),
    /// Detect broadcast periods per channel into broadcasts.csv.
    Broadcasts(InOut),
    /// Compute per-user features and labels into bots.csv.
    Bots(InOut),
    /// Compute per-window metric vectors into chunks.csv.
    Metrics(InOut),
    /// Aggregate curves and per-user slopes.
    Phases {
        #[command(subcommand)]
        what: PhasesCommand,
    },
    /// Generate a synthetic corpus with planted ground truth.
    Simulate {
        /// JSON generator configuration.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render plot-ready tables from run artifacts.
    Report {
        /// Directory holding curve.csv and slopes.csv.
        #[arg(long)]
        artifacts: PathBuf,
        /// Output directory; defaults to the artifacts directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline and write all artifacts.
    Run(InOut),
}

#[derive(Subcommand)]
enum PhasesCommand {
    /// Conditional median curve into curve.csv.
    Curve {
        #[command(flatten)]
        io: InOut,
        /// Also write the channel-popularity quartile breakdown.
        #[arg(long)]
        quartiles: bool,
    },
    /// Per-user slope pairs into slopes.csv.
    Slopes(InOut),
}

#[derive(Args, Clone)]
struct InOut {
    /// Input chat log.
    #[arg(long)]
    input: PathBuf,
    /// Artifact directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

/// Validated global options in pipeline terms.
pub(crate) struct Settings {
    pub format: LogFormat,
    pub salt: Vec<u8>,
    pub emotes: Option<PathBuf>,
    pub markers: Option<PathBuf>,
    pub pipeline: PipelineConfig,
}

fn parse_settings(global: &GlobalOpts) -> Result<Settings> {
    let format: LogFormat = global.format.parse().map_err(|e: String| anyhow!(e))?;
    let salt = decode_hex(&global.salt)?;
    if global.dt == 0 {
        return Err(anyhow!("--dt must be positive"));
    }
    let workers = if global.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        global.workers
    };
    Ok(Settings {
        format,
        salt,
        emotes: global.emotes.clone(),
        markers: global.markers.clone(),
        pipeline: PipelineConfig {
            dt: TimeDelta::from_minutes(global.dt as i64),
            merge_gap: TimeDelta::from_minutes(global.merge_gap as i64),
            session_timeout: TimeDelta::from_secs(global.session_timeout as i64),
            rho_threshold: global.rho_threshold,
            channel_filter: ChannelFilter {
                min_messages: global.min_messages,
                min_users: global.min_users,
                min_chunk_users: global.min_chunk_users,
            },
            fit: FitConfig { v_star: global.v_star, v_max: global.v_max, min_obs: global.min_obs },
            bins: Default::default(),
            include_offline: global.include_offline,
            workers,
        },
    })
}

fn decode_hex(s: &str) -> Result<Vec<u8>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if !s.len().is_multiple_of(2) || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(anyhow!("salt must be an even-length hex string"));
    }
    Ok((0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).expect("validated hex"))
        .collect())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let settings = parse_settings(&cli.global)?;
    match cli.command {
        Command::Ingest(io) => commands::ingest(&settings, &io.input, &io.out),
        Command::Broadcasts(io) => commands::broadcasts(&settings, &io.input, &io.out),
        Command::Bots(io) => commands::bots(&settings, &io.input, &io.out),
        Command::Metrics(io) => commands::metrics(&settings, &io.input, &io.out),
        Command::Phases { what } => match what {
            PhasesCommand::Curve { io, quartiles } => {
                commands::phases_curve(&settings, &io.input, &io.out, quartiles)
            }
            PhasesCommand::Slopes(io) => commands::phases_slopes(&settings, &io.input, &io.out),
        },
        Command::Simulate { config, out } => commands::simulate(&config, &out),
        Command::Report { artifacts, out } => {
            let out = out.unwrap_or_else(|| artifacts.clone());
            commands::report(&artifacts, &out)
        }
        Command::Run(io) => commands::run(&settings, &io.input, &io.out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_salt_decodes() {
        assert_eq!(decode_hex("").unwrap(), Vec::<u8>::new());
        assert_eq!(decode_hex("00ff10").unwrap(), vec![0x00, 0xff, 0x10]);
        assert!(decode_hex("abc").is_err());
        assert!(decode_hex("zz").is_err());
    }
}
