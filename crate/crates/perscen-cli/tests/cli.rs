//! End-to-end tests of the `perscen` binary: the synth -> prepare -> train ->
//! evaluate pipeline over a tempdir workdir, plus exit-code and output
//! contracts.

use perscen::config::RunConfig;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_perscen"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn assert_usage_error(args: &[&str], needle: &str) {
    let out = run(args);
    assert_eq!(out.status.code(), Some(2), "{args:?} should exit 2");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(needle), "stderr {err:?} should mention {needle:?}");
    // our own failures are single lines; clap usage errors may span more
    if err.starts_with("error: ") && !err.contains("Usage:") {
        assert_eq!(err.trim_end().lines().count(), 1, "one-line error contract");
    }
}

/// Small but non-trivial dataset: fast enough for tests, rich enough that
/// every subcommand has real work to do.
fn synth_args<'a>(workdir: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "synth",
        "--workdir",
        workdir,
        "--users",
        "30",
        "--items",
        "20",
        "--interactions-per-user",
        "10",
    ];
    args.extend_from_slice(extra);
    args
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let wd = dir.path().to_str().unwrap();

    run_ok(&synth_args(wd, &[]));
    for name in ["schema.json", "interactions.csv", "user_features.csv", "item_features.csv", "run.json"] {
        assert!(dir.path().join(name).is_file(), "{name} missing after synth");
    }

    let msg = run_ok(&["prepare", "--workdir", wd]);
    assert!(msg.contains("train"), "prepare reports split sizes: {msg}");
    assert!(dir.path().join("prepared/sequences.json").is_file());

    run_ok(&["train", "--workdir", wd, "--epochs", "2"]);
    assert!(dir.path().join("checkpoint/manifest.json").is_file());
    assert!(dir.path().join("checkpoint/params.bin").is_file());
    let log = std::fs::read_to_string(dir.path().join("train_log.jsonl")).unwrap();
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).expect("log lines are JSON");
        assert!(v["total_loss"].as_f64().unwrap().is_finite());
    }

    run_ok(&["evaluate", "--workdir", wd]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["dataset"], "synthetic");
    assert_eq!(report["scenarios"].as_array().unwrap().len(), 3);
    assert!(dir.path().join("index/index.bin").is_file());

    let line = run_ok(&["retrieve", "--workdir", wd, "--user", "3", "--scenario", "1", "--k", "5"]);
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(v["items"].as_array().unwrap().len(), 5);
    let scores: Vec<f64> =
        v["scores"].as_array().unwrap().iter().map(|s| s.as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]), "scores ranked descending");

    run_ok(&["dump-graph", "--workdir", wd, "--user", "3"]);
    let graph: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("graph_user_3.json")).unwrap())
            .unwrap();
    let first = &graph.as_array().unwrap()[0];
    assert_eq!(first["entity_id"], 3);
    let matrix = first["matrix"].as_array().unwrap();
    assert_eq!(matrix.len(), matrix[0].as_array().unwrap().len(), "square matrix");

    run_ok(&["dump-graph", "--workdir", wd, "--item", "7"]);
    assert!(dir.path().join("graph_item_7.json").is_file());

    run_ok(&["dump-preferences", "--workdir", wd]);
    let prefs = std::fs::read_to_string(dir.path().join("preferences.jsonl")).unwrap();
    assert_eq!(prefs.lines().count(), 30 * 3, "one line per (user, scenario)");
}

#[test]
fn evaluate_is_idempotent_and_echoes_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let wd = dir.path().to_str().unwrap();
    run_ok(&synth_args(wd, &[]));
    run_ok(&["prepare", "--workdir", wd]);
    run_ok(&["train", "--workdir", wd, "--epochs", "1"]);
    run_ok(&["evaluate", "--workdir", wd]);
    let first = std::fs::read(dir.path().join("eval_report.json")).unwrap();
    run_ok(&["evaluate", "--workdir", wd]);
    let second = std::fs::read(dir.path().join("eval_report.json")).unwrap();
    assert_eq!(first, second, "rerunning evaluate reproduces the report byte-for-byte");

    // both output manifests carry a config that reparses to an equal RunConfig
    for manifest in ["checkpoint/manifest.json", "index/index.json"] {
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(manifest)).unwrap())
                .unwrap();
        let config: RunConfig = serde_json::from_value(v["config"].clone()).unwrap();
        let reparsed: RunConfig =
            serde_json::from_str(&serde_json::to_string(&config).unwrap()).unwrap();
        assert_eq!(config, reparsed, "{manifest} config round-trip");
        assert_eq!(config.dataset_name, "synthetic");
    }
}

#[test]
fn ablation_flags_reach_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let wd = dir.path().to_str().unwrap();
    run_ok(&synth_args(wd, &[]));
    run_ok(&["prepare", "--workdir", wd]);
    run_ok(&["train", "--workdir", wd, "--epochs", "1", "--no-vq", "--no-glu"]);
    let v: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("checkpoint/manifest.json")).unwrap(),
    )
    .unwrap();
    let config: RunConfig = serde_json::from_value(v["config"].clone()).unwrap();
    assert!(config.ablation.no_vq && config.ablation.no_glu);
    assert!(!config.ablation.no_gnn);

    // the quantization loss is identically zero without a codebook
    let log = std::fs::read_to_string(dir.path().join("train_log.jsonl")).unwrap();
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["vq_loss"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn synthesis_is_deterministic_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    run_ok(&synth_args(a.path().to_str().unwrap(), &["--seed", "7"]));
    run_ok(&synth_args(b.path().to_str().unwrap(), &["--seed", "7"]));
    run_ok(&synth_args(c.path().to_str().unwrap(), &["--seed", "8"]));
    let read = |d: &Path| std::fs::read(d.join("interactions.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()), "same seed, same bytes");
    assert_ne!(read(a.path()), read(c.path()), "different seed, different data");
}

#[test]
fn missing_inputs_exit_with_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let wd = dir.path().to_str().unwrap();

    assert_usage_error(&["prepare", "--workdir", wd], "schema");
    assert_usage_error(&["train", "--workdir", wd], "prepare");
    assert_usage_error(&["evaluate", "--workdir", wd], "train");
    assert_usage_error(&["train", "--workdir", wd, "--bogus-flag"], "--bogus-flag");

    // out-of-range entity ids after a real pipeline
    run_ok(&synth_args(wd, &[]));
    run_ok(&["prepare", "--workdir", wd]);
    run_ok(&["train", "--workdir", wd, "--epochs", "1"]);
    assert_usage_error(
        &["retrieve", "--workdir", wd, "--user", "999", "--scenario", "0", "--k", "3"],
        "999",
    );
    assert_usage_error(
        &["retrieve", "--workdir", wd, "--user", "0", "--scenario", "9", "--k", "3"],
        "scenario",
    );
    assert_usage_error(&["dump-graph", "--workdir", wd], "--user");

    // a config file that fails validation is rejected up front
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"eval": {"ks": [100, 50]}}"#).unwrap();
    assert_usage_error(&["evaluate", "--workdir", wd, "--config", bad.to_str().unwrap()], "ks");
}
