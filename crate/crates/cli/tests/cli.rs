//! CLI behavior: flag plumbing, error paths, and stage composability.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cacophony() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cacophony"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = cacophony().args(args).output().expect("spawn cacophony");
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

fn write_simulate_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    // Spans three UTC days so planted bots clear the activity floor.
    fs::write(
        &path,
        r#"{
            "seed": 5,
            "slots": 600,
            "channels": 3,
            "users_per_channel": 30,
            "bot_fraction": 0.1,
            "volume_split": 0.6,
            "volume_sub": [10, 40],
            "volume_sup": [40, 150],
            "plan": {"on_slots": 24, "off_slots": 20, "start_offset": 2}
        }"#,
    )
    .unwrap();
    path
}

#[test]
fn help_lists_subcommands() {
    let out = run_ok(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["ingest", "broadcasts", "bots", "metrics", "phases", "simulate", "report", "run"] {
        assert!(text.contains(sub), "help is missing {sub}");
    }
}

#[test]
fn empty_input_reports_no_messages() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.tsv");
    fs::write(&input, "").unwrap();
    let out = cacophony()
        .args(["run", "--input", input.to_str().unwrap(), "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no messages"), "stderr: {stderr}");
    // Failed runs leave no partial artifacts behind.
    assert!(!dir.path().join("out").join("summary.json").exists());
}

#[test]
fn dt_flag_propagates_to_the_chunk_grid() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tiny.tsv");
    let mut corpus = String::new();
    for minute in [0, 7, 13, 21, 34, 55] {
        corpus
            .push_str(&format!("2014-09-01T12:{minute:02}:30Z\tchan\tuser{minute}\thello there\n"));
    }
    fs::write(&input, corpus).unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "metrics",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--dt",
        "10",
        "--include-offline",
    ]);
    let chunks = fs::read_to_string(out_dir.join("chunks.csv")).unwrap();
    let mut rows = 0;
    for line in chunks.lines().skip(1) {
        let t_start = line.split(',').nth(1).unwrap();
        let minute: u32 = t_start[14..16].parse().unwrap();
        assert_eq!(minute % 10, 0, "t_start {t_start} is off the 10-minute grid");
        rows += 1;
    }
    assert!(rows >= 3, "expected several chunks, got {rows}");
}

#[test]
fn stage_artifacts_match_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_simulate_config(dir.path());
    let sim = dir.path().join("sim");
    run_ok(&["simulate", "--config", config.to_str().unwrap(), "--out", sim.to_str().unwrap()]);
    let corpus = sim.join("corpus.tsv");

    let common = ["--salt", "c0ffee", "--min-messages", "100", "--min-users", "10"];
    let run_dir = dir.path().join("run");
    let mut args =
        vec!["run", "--input", corpus.to_str().unwrap(), "--out", run_dir.to_str().unwrap()];
    args.extend_from_slice(&common);
    run_ok(&args);

    let stage_specs: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("broadcasts", vec!["broadcasts"], vec!["broadcasts.csv"]),
        ("bots", vec!["bots"], vec!["bots.csv"]),
        ("metrics", vec!["metrics"], vec!["chunks.csv"]),
        ("curve", vec!["phases", "curve"], vec!["curve.csv"]),
        ("slopes", vec!["phases", "slopes"], vec!["slopes.csv"]),
    ];
    for (name, subcmd, artifacts) in stage_specs {
        let stage_dir = dir.path().join(format!("stage-{name}"));
        let mut args: Vec<&str> = subcmd.clone();
        let stage_str = stage_dir.to_str().unwrap().to_string();
        args.extend_from_slice(&["--input", corpus.to_str().unwrap(), "--out"]);
        let mut owned: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        owned.push(stage_str);
        owned.extend(common.iter().map(|s| s.to_string()));
        let out = cacophony().args(&owned).output().unwrap();
        assert!(out.status.success(), "stage {name}: {}", String::from_utf8_lossy(&out.stderr));
        for artifact in artifacts {
            let a = fs::read(run_dir.join(artifact)).unwrap();
            let b = fs::read(stage_dir.join(artifact)).unwrap();
            assert_eq!(a, b, "stage artifact {artifact} differs from full run");
        }
    }
}

#[test]
fn summary_bot_count_matches_planted_truth() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_simulate_config(dir.path());
    let sim = dir.path().join("sim");
    run_ok(&["simulate", "--config", config.to_str().unwrap(), "--out", sim.to_str().unwrap()]);
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(sim.join("truth.json")).unwrap()).unwrap();
    let planted_bots = truth["bot_ids"].as_array().unwrap().len() as i64;
    assert!(planted_bots > 0);

    let run_dir = dir.path().join("run");
    run_ok(&[
        "run",
        "--input",
        sim.join("corpus.tsv").to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--min-messages",
        "100",
        "--min-users",
        "10",
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("summary.json")).unwrap()).unwrap();
    let removed = summary["bots_removed"].as_i64().unwrap();
    // A small misclassification band is acceptable; wholesale misses are not.
    assert!(
        (removed - planted_bots).abs() <= (planted_bots / 10).max(2),
        "planted {planted_bots} bots, removed {removed}"
    );
}

#[test]
fn report_renders_figures_and_names_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_simulate_config(dir.path());
    let sim = dir.path().join("sim");
    run_ok(&["simulate", "--config", config.to_str().unwrap(), "--out", sim.to_str().unwrap()]);
    let run_dir = dir.path().join("run");
    run_ok(&[
        "run",
        "--input",
        sim.join("corpus.tsv").to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--min-messages",
        "100",
        "--min-users",
        "10",
    ]);

    run_ok(&["report", "--artifacts", run_dir.to_str().unwrap()]);
    let overload = fs::read_to_string(run_dir.join("fig_overload.csv")).unwrap();
    assert!(overload.starts_with("V_bin,stat,se\n"));
    assert!(overload.lines().count() > 1, "overload figure has no rows");
    let quadrants = fs::read_to_string(run_dir.join("fig_quadrants.csv")).unwrap();
    assert!(quadrants.starts_with("quadrant,n,share\n"));
    assert_eq!(quadrants.lines().count(), 5);

    fs::remove_file(run_dir.join("slopes.csv")).unwrap();
    let out =
        cacophony().args(["report", "--artifacts", run_dir.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("slopes.csv"), "stderr: {stderr}");
}

#[test]
fn salt_env_var_matches_flag() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tiny.tsv");
    fs::write(
        &input,
        "2014-09-01T12:00:00Z\tchan\talice\thello\n2014-09-01T12:00:05Z\tchan\tbob\thi there\n",
    )
    .unwrap();
    let flag_dir = dir.path().join("flag");
    run_ok(&[
        "bots",
        "--input",
        input.to_str().unwrap(),
        "--out",
        flag_dir.to_str().unwrap(),
        "--salt",
        "ab12",
    ]);
    let env_dir = dir.path().join("env");
    let out = cacophony()
        .args(["bots", "--input", input.to_str().unwrap(), "--out", env_dir.to_str().unwrap()])
        .env("CACOPHONY_SALT", "ab12")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        fs::read(flag_dir.join("bots.csv")).unwrap(),
        fs::read(env_dir.join("bots.csv")).unwrap()
    );
}

#[test]
fn jsonl_input_is_supported() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("log.jsonl");
    fs::write(
        &input,
        r#"{"ts":"2014-09-01T12:00:00Z","channel":"c","user":"u1","text":"hello?"}
{"ts":"2014-09-01T12:00:30Z","channel":"c","user":"u2","text":"hi @u1"}
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "metrics",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "jsonl",
        "--include-offline",
    ]);
    let chunks = fs::read_to_string(out_dir.join("chunks.csv")).unwrap();
    assert_eq!(chunks.lines().count(), 2, "{chunks}");
    let row = chunks.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[2], "2"); // V
    assert_eq!(fields[3], "2"); // U
    assert_eq!(fields[6], "0.5"); // p_q
    assert_eq!(fields[7], "0.5"); // p_at
}
