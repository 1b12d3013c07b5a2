//! Subcommand implementations. Every stage command reuses the same pipeline
//! functions as `run`, so stage artifacts match full-run artifacts byte for
//! byte.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use cacophony_core::chatlog::{
    ingest as ingest_streams, ChannelStream, IngestOptions, IngestReport,
};
use cacophony_core::metrics::{EmoteLexicon, MarkerLexicon, DEFAULT_EMOTES};
use cacophony_core::phases::Quadrant;
use cacophony_core::pipeline::{
    bot_ids, compute_chunk_metrics, compute_phases, compute_quartiles, detect_all_broadcasts,
    label_users, with_workers, ChannelBroadcasts, ChunkRow, LabeledUser, MetricsOutput,
    PhasesOutput,
};
use cacophony_core::synthgen::{self, SynthConfig};

use crate::artifacts::{opt_float, with_artifacts, Csv};
use crate::Settings;

fn load_streams(settings: &Settings, input: &Path) -> Result<(Vec<ChannelStream>, IngestReport)> {
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let reader = BufReader::with_capacity(256 * 1024, file);
    let opts = IngestOptions {
        format: settings.format,
        salt: settings.salt.clone(),
        ..IngestOptions::default()
    };
    let (streams, report) = ingest_streams(reader, &opts)?;
    if report.accepted == 0 {
        bail!("no messages in {}", input.display());
    }
    Ok((streams, report))
}

fn load_lexicons(settings: &Settings) -> Result<(EmoteLexicon, MarkerLexicon)> {
    let emotes = match &settings.emotes {
        Some(path) => EmoteLexicon::load(path)
            .with_context(|| format!("loading emote lexicon {}", path.display()))?,
        None => EmoteLexicon::new(DEFAULT_EMOTES.iter().copied()).expect("bundled list"),
    };
    let markers = match &settings.markers {
        Some(path) => MarkerLexicon::load(path)
            .with_context(|| format!("loading marker lexicon {}", path.display()))?,
        None => MarkerLexicon::default_markers(),
    };
    Ok((emotes, markers))
}

fn render_broadcasts(broadcasts: &[ChannelBroadcasts]) -> Vec<u8> {
    let mut csv = Csv::new("channel,start_iso,end_iso");
    for channel in broadcasts {
        for interval in &channel.intervals {
            csv.row(&[
                &channel.channel_id.to_hex(),
                &interval.start.to_string(),
                &interval.end.to_string(),
            ]);
        }
    }
    csv.into_bytes()
}

fn render_bots(labeled: &[LabeledUser]) -> Vec<u8> {
    let mut csv = Csv::new("user,rho,tau_seconds,message_count,active_days,label");
    for user in labeled {
        let f = &user.features;
        csv.row(&[
            &f.user_id.to_hex(),
            &f.compression_ratio.to_string(),
            &opt_float(f.inter_message_time),
            &f.message_count.to_string(),
            &f.active_days.to_string(),
            user.label.as_str(),
        ]);
    }
    csv.into_bytes()
}

fn render_chunks(rows: &[ChunkRow]) -> Vec<u8> {
    let mut csv = Csv::new("channel,t_start,V,U,M_u,l_m,p_q,p_at,p_d,p_emote,rho_c");
    for row in rows {
        let m = row.metrics.as_ref();
        csv.row(&[
            &row.channel_id.to_hex(),
            &row.t_start.to_string(),
            &row.volume.to_string(),
            &row.users.to_string(),
            &opt_float(m.map(|m| m.messages_per_user)),
            &opt_float(m.map(|m| m.mean_length)),
            &opt_float(m.map(|m| m.question_fraction)),
            &opt_float(m.map(|m| m.mention_fraction)),
            &opt_float(m.map(|m| m.marker_fraction)),
            &opt_float(m.map(|m| m.emote_fraction)),
            &opt_float(m.map(|m| m.compression_ratio)),
        ]);
    }
    csv.into_bytes()
}

fn render_curve(phases: &PhasesOutput) -> Vec<u8> {
    let mut csv = Csv::new("V_bin,stat,se_median,se_mean,n");
    if let Some(curve) = &phases.curve {
        for bin in &curve.bins {
            csv.row(&[
                &bin.v_label.to_string(),
                &bin.stat.to_string(),
                &bin.se_median.to_string(),
                &bin.se_mean.to_string(),
                &bin.n.to_string(),
            ]);
        }
    }
    csv.into_bytes()
}

fn render_slopes(phases: &PhasesOutput) -> Vec<u8> {
    let mut csv = Csv::new("user,alpha_sub,alpha_sup,n_sub,n_sup,quadrant");
    for (user, pair) in &phases.slopes {
        csv.row(&[
            &user.to_hex(),
            &pair.alpha_sub.to_string(),
            &pair.alpha_sup.to_string(),
            &pair.n_sub.to_string(),
            &pair.n_sup.to_string(),
            &pair.quadrant.to_string(),
        ]);
    }
    csv.into_bytes()
}

#[derive(Serialize)]
struct SummaryConfig {
    format: String,
    salt: String,
    dt_minutes: i64,
    merge_gap_minutes: i64,
    session_timeout_secs: i64,
    rho_threshold: f64,
    min_messages: u64,
    min_users: u64,
    min_chunk_users: u64,
    v_star: u64,
    v_max: u64,
    min_obs: usize,
    include_offline: bool,
}

#[derive(Serialize)]
struct Summary {
    config: SummaryConfig,
    messages_accepted: u64,
    lines_skipped: u64,
    channels: u64,
    channels_analyzed: u64,
    users: u64,
    bots_removed: u64,
    chunks_total: u64,
    chunks_analyzed: u64,
    curve_chunks: u64,
    users_regressed: u64,
    users_skipped_degenerate: u64,
    v_star_estimate: Option<u64>,
    quadrants: BTreeMap<String, u64>,
}

fn build_summary(
    settings: &Settings,
    report: &IngestReport,
    streams: &[ChannelStream],
    labeled: &[LabeledUser],
    metrics: &MetricsOutput,
    phases: &PhasesOutput,
) -> Summary {
    let cfg = &settings.pipeline;
    let mut quadrants: BTreeMap<String, u64> =
        [Quadrant::I, Quadrant::II, Quadrant::III, Quadrant::IV]
            .iter()
            .map(|q| (q.to_string(), 0))
            .collect();
    for (_, pair) in &phases.slopes {
        *quadrants.get_mut(&pair.quadrant.to_string()).expect("all quadrants present") += 1;
    }
    Summary {
        config: SummaryConfig {
            format: match settings.format {
                cacophony_core::chatlog::LogFormat::Tsv => "tsv".to_string(),
                cacophony_core::chatlog::LogFormat::Jsonl => "jsonl".to_string(),
            },
            salt: settings.salt.iter().map(|b| format!("{b:02x}")).collect(),
            dt_minutes: cfg.dt.as_ms() / 60_000,
            merge_gap_minutes: cfg.merge_gap.as_ms() / 60_000,
            session_timeout_secs: cfg.session_timeout.as_ms() / 1_000,
            rho_threshold: cfg.rho_threshold,
            min_messages: cfg.channel_filter.min_messages,
            min_users: cfg.channel_filter.min_users,
            min_chunk_users: cfg.channel_filter.min_chunk_users,
            v_star: cfg.fit.v_star,
            v_max: cfg.fit.v_max,
            min_obs: cfg.fit.min_obs,
            include_offline: cfg.include_offline,
        },
        messages_accepted: report.accepted,
        lines_skipped: report.skipped,
        channels: streams.len() as u64,
        channels_analyzed: phases.channels_analyzed,
        users: labeled.len() as u64,
        bots_removed: labeled.iter().filter(|u| u.label.as_str() == "bot").count() as u64,
        chunks_total: metrics.chunks_total,
        chunks_analyzed: metrics.rows.len() as u64,
        curve_chunks: phases.curve_chunks,
        users_regressed: phases.slopes.len() as u64,
        users_skipped_degenerate: phases.degenerate_users,
        v_star_estimate: phases.peak,
        quadrants,
    }
}

pub fn ingest(settings: &Settings, input: &Path, out: &Path) -> Result<()> {
    let (streams, report) = load_streams(settings, input)?;
    with_artifacts(out, |artifacts| {
        // Global time order with channel id and arrival order breaking ties.
        let mut index: Vec<(usize, usize)> = Vec::new();
        for (s, stream) in streams.iter().enumerate() {
            for m in 0..stream.messages.len() {
                index.push((s, m));
            }
        }
        index.sort_by_key(|&(s, m)| (streams[s].messages[m].timestamp, streams[s].channel_id, m));
        let mut buf = Vec::new();
        for (s, m) in index {
            let msg = &streams[s].messages[m];
            buf.extend_from_slice(
                format!(
                    "{}\t{}\t{}\t{}\n",
                    msg.timestamp,
                    msg.channel_id.to_hex(),
                    msg.user_id.to_hex(),
                    msg.text
                )
                .as_bytes(),
            );
        }
        artifacts.write("messages.tsv", &buf)?;
        #[derive(Serialize)]
        struct Report {
            accepted: u64,
            skipped: u64,
            channels: u64,
        }
        let report = Report {
            accepted: report.accepted,
            skipped: report.skipped,
            channels: streams.len() as u64,
        };
        artifacts.write("ingest_report.json", &to_pretty_json(&report)?)?;
        Ok(())
    })?;
    eprintln!("ingested {} messages ({} skipped)", report.accepted, report.skipped);
    Ok(())
}

pub fn broadcasts(settings: &Settings, input: &Path, out: &Path) -> Result<()> {
    let (streams, _) = load_streams(settings, input)?;
    let cfg = &settings.pipeline;
    let broadcasts = with_workers(cfg.workers, || detect_all_broadcasts(&streams, cfg));
    with_artifacts(out, |artifacts| {
        artifacts.write("broadcasts.csv", &render_broadcasts(&broadcasts))?;
        Ok(())
    })
}

pub fn bots(settings: &Settings, input: &Path, out: &Path) -> Result<()> {
    let (streams, _) = load_streams(settings, input)?;
    let labeled = label_users(&streams, &settings.pipeline);
    with_artifacts(out, |artifacts| {
        artifacts.write("bots.csv", &render_bots(&labeled))?;
        Ok(())
    })
}

fn run_through_metrics(
    settings: &Settings,
    streams: &[ChannelStream],
) -> Result<(Vec<ChannelBroadcasts>, Vec<LabeledUser>, MetricsOutput)> {
    let cfg = &settings.pipeline;
    let (emotes, markers) = load_lexicons(settings)?;
    Ok(with_workers(cfg.workers, || {
        let broadcasts = detect_all_broadcasts(streams, cfg);
        let labeled = label_users(streams, cfg);
        let bots = bot_ids(&labeled);
        let metrics = compute_chunk_metrics(streams, &bots, &broadcasts, &emotes, &markers, cfg);
        (broadcasts, labeled, metrics)
    }))
}

pub fn metrics(settings: &Settings, input: &Path, out: &Path) -> Result<()> {
    let (streams, _) = load_streams(settings, input)?;
    let (_, _, metrics) = run_through_metrics(settings, &streams)?;
    with_artifacts(out, |artifacts| {
        artifacts.write("chunks.csv", &render_chunks(&metrics.rows))?;
        Ok(())
    })
}

pub fn phases_curve(settings: &Settings, input: &Path, out: &Path, quartiles: bool) -> Result<()> {
    let (streams, _) = load_streams(settings, input)?;
    let (_, _, metrics) = run_through_metrics(settings, &streams)?;
    let phases = compute_phases(&metrics, &settings.pipeline);
    with_artifacts(out, |artifacts| {
        artifacts.write("curve.csv", &render_curve(&phases))?;
        if quartiles {
            let mut csv = Csv::new("quartile,V_bin,stat,se_median,se_mean,n");
            if let Ok(groups) = compute_quartiles(&metrics, &settings.pipeline) {
                for group in &groups {
                    for bin in &group.curve.bins {
                        csv.row(&[
                            &group.quartile.to_string(),
                            &bin.v_label.to_string(),
                            &bin.stat.to_string(),
                            &bin.se_median.to_string(),
                            &bin.se_mean.to_string(),
                            &bin.n.to_string(),
                        ]);
                    }
                }
            }
            artifacts.write("curve_quartiles.csv", &csv.into_bytes())?;
        }
        Ok(())
    })
}

pub fn phases_slopes(settings: &Settings, input: &Path, out: &Path) -> Result<()> {
    let (streams, _) = load_streams(settings, input)?;
    let (_, _, metrics) = run_through_metrics(settings, &streams)?;
    let phases = compute_phases(&metrics, &settings.pipeline);
    with_artifacts(out, |artifacts| {
        artifacts.write("slopes.csv", &render_slopes(&phases))?;
        Ok(())
    })
}

pub fn run(settings: &Settings, input: &Path, out: &Path) -> Result<()> {
    let (streams, report) = load_streams(settings, input)?;
    let (broadcasts, labeled, metrics) = run_through_metrics(settings, &streams)?;
    let phases = compute_phases(&metrics, &settings.pipeline);
    let summary = build_summary(settings, &report, &streams, &labeled, &metrics, &phases);
    with_artifacts(out, |artifacts| {
        artifacts.write("broadcasts.csv", &render_broadcasts(&broadcasts))?;
        artifacts.write("bots.csv", &render_bots(&labeled))?;
        artifacts.write("chunks.csv", &render_chunks(&metrics.rows))?;
        artifacts.write("curve.csv", &render_curve(&phases))?;
        artifacts.write("slopes.csv", &render_slopes(&phases))?;
        artifacts.write("summary.json", &to_pretty_json(&summary)?)?;
        Ok(())
    })?;
    eprintln!(
        "analyzed {} messages: {} channels, {} bots removed, {} chunks, {} users regressed",
        summary.messages_accepted,
        summary.channels,
        summary.bots_removed,
        summary.chunks_analyzed,
        summary.users_regressed
    );
    Ok(())
}

pub fn simulate(config_path: &Path, out: &Path) -> Result<()> {
    let config_text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let config: SynthConfig = serde_json::from_str(&config_text)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;

    let corpus_path = out.join("corpus.tsv");
    let file = File::create(&corpus_path)
        .with_context(|| format!("creating {}", corpus_path.display()))?;
    let mut writer = BufWriter::with_capacity(256 * 1024, file);
    let generated = match synthgen::generate(&config, &mut writer) {
        Ok(generated) => generated,
        Err(e) => {
            drop(writer);
            let _ = std::fs::remove_file(&corpus_path);
            return Err(anyhow!(e));
        }
    };
    writer.flush().context("flushing corpus")?;

    let truth_path = out.join("truth.json");
    std::fs::write(&truth_path, to_pretty_json(&generated.truth)?)
        .with_context(|| format!("writing {}", truth_path.display()))?;
    eprintln!("simulated {} messages", generated.messages_written);
    Ok(())
}

pub fn report(artifacts_dir: &Path, out: &Path) -> Result<()> {
    let curve_path = artifacts_dir.join("curve.csv");
    let slopes_path = artifacts_dir.join("slopes.csv");
    for (name, path) in [("curve.csv", &curve_path), ("slopes.csv", &slopes_path)] {
        if !path.exists() {
            bail!("missing artifact: {name} (expected at {})", path.display());
        }
    }
    let curve_text = std::fs::read_to_string(&curve_path)?;
    let slopes_text = std::fs::read_to_string(&slopes_path)?;

    with_artifacts(out, |artifacts| {
        let mut fig = Csv::new("V_bin,stat,se");
        for line in curve_text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                bail!("malformed curve.csv row: {line:?}");
            }
            // se column carries the standard error of the mean.
            fig.row(&[fields[0], fields[1], fields[3]]);
        }
        artifacts.write("fig_overload.csv", &fig.into_bytes())?;

        let mut counts: BTreeMap<&str, u64> =
            [("I", 0), ("II", 0), ("III", 0), ("IV", 0)].into_iter().collect();
        let mut total = 0u64;
        for line in slopes_text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                bail!("malformed slopes.csv row: {line:?}");
            }
            let quadrant = fields[5];
            let Some(count) = counts.get_mut(quadrant) else {
                bail!("unknown quadrant {quadrant:?} in slopes.csv");
            };
            *count += 1;
            total += 1;
        }
        let mut fig = Csv::new("quadrant,n,share");
        for (quadrant, n) in counts {
            let share = if total == 0 { 0.0 } else { n as f64 / total as f64 };
            fig.row(&[quadrant, &n.to_string(), &share.to_string()]);
        }
        artifacts.write("fig_quadrants.csv", &fig.into_bytes())?;
        Ok(())
    })
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
