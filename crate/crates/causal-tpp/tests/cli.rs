//! End-to-end command-line workflow: generate data, train, then exercise
//! every downstream subcommand against the produced artifacts, asserting on
//! exit codes and on the files written.

use causal_tpp::cli::run;
use std::fs;
use std::path::Path;

const GENERATOR_TOML: &str = r#"
num_types = 3
base_rates = [0.3, 0.3, 0.3]
decay_rate = 1.5
horizon = 6.0

[[edges]]
from = 0
to = 1
weight = 0.8

[[edges]]
from = 1
to = 2
weight = 0.7
"#;

fn s(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

/// Runs the whole pipeline in one temp dir so later steps can consume
/// earlier artifacts.
#[test]
fn full_workflow_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gen_path = dir.path().join("generator.toml");
    fs::write(&gen_path, GENERATOR_TOML).unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let truth = dir.path().join("truth.json");

    assert_eq!(
        run([
            "causal-tpp",
            "gen-synthetic",
            "--generator",
            &s(&gen_path),
            "--out",
            &s(&corpus),
            "--count",
            "20",
            "--seed",
            "5",
            "--write-truth",
            &s(&truth),
        ]),
        0
    );
    assert!(corpus.exists() && truth.exists());

    let ckpt = dir.path().join("model.ckpt");
    let log = dir.path().join("train_log.jsonl");
    let train_args = |out: &Path| {
        [
            "causal-tpp".into(),
            "train".into(),
            "--corpus".into(),
            s(&corpus),
            "--out".into(),
            s(out),
            "--log".into(),
            s(&log),
            "--epochs".into(),
            "3".into(),
            "--embed-half-dim".into(),
            "3".into(),
            "--attn-dim".into(),
            "3".into(),
            "--hidden-dim".into(),
            "4".into(),
            "--substeps".into(),
            "3".into(),
            "--seed".into(),
            "9".into(),
        ]
        .map(String::from)
    };
    assert_eq!(run(train_args(&ckpt)), 0);
    assert!(ckpt.exists());
    let log_lines = fs::read_to_string(&log).unwrap();
    // 3 epochs, one train and one held-out record each.
    assert_eq!(log_lines.lines().count(), 6);

    // Identical config reproduces a byte-identical checkpoint.
    let ckpt2 = dir.path().join("model2.ckpt");
    assert_eq!(run(train_args(&ckpt2)), 0);
    assert_eq!(fs::read(&ckpt).unwrap(), fs::read(&ckpt2).unwrap());

    // Evaluation with goodness-of-fit and truth scoring.
    let report = dir.path().join("report.json");
    let records = dir.path().join("records.jsonl");
    assert_eq!(
        run([
            "causal-tpp",
            "eval",
            "--model",
            &s(&ckpt),
            "--corpus",
            &s(&corpus),
            "--out",
            &s(&report),
            "--records",
            &s(&records),
            "--rescaling",
            "--truth",
            &s(&truth),
        ]),
        0
    );
    let report_text = fs::read_to_string(&report).unwrap();
    assert!(report_text.contains("\"metrics\""));
    assert!(report_text.contains("\"rescaling\""));
    assert!(report_text.contains("\"edge_recovery_auc\""));

    // Simulation from the trained checkpoint.
    let sim = dir.path().join("sim.jsonl");
    assert_eq!(
        run([
            "causal-tpp",
            "simulate",
            "--model",
            &s(&ckpt),
            "--out",
            &s(&sim),
            "--count",
            "4",
            "--horizon",
            "5.0",
        ]),
        0
    );
    assert_eq!(fs::read_to_string(&sim).unwrap().lines().count(), 4);

    // Graph snapshots at explicit times, with DOT output.
    let snaps = dir.path().join("snapshots.jsonl");
    let dots = dir.path().join("dots");
    assert_eq!(
        run([
            "causal-tpp",
            "graphs",
            "--model",
            &s(&ckpt),
            "--corpus",
            &s(&corpus),
            "--times",
            "1.0,2.0,3.5",
            "--out",
            &s(&snaps),
            "--dot-dir",
            &s(&dots),
        ]),
        0
    );
    assert_eq!(fs::read_to_string(&snaps).unwrap().lines().count(), 3);
    assert!(dots.join("graph_0000.dot").exists());
    assert!(fs::read_to_string(dots.join("graph_0002.dot"))
        .unwrap()
        .starts_with("digraph"));

    // Path matching against declared chains.
    let paths = dir.path().join("paths.json");
    fs::write(
        &paths,
        r#"[{"label": "chain", "types": [0, 1, 2]}, {"label": "direct", "types": [0, 1]}]"#,
    )
    .unwrap();
    let matches_out = dir.path().join("matches.json");
    assert_eq!(
        run([
            "causal-tpp",
            "match-paths",
            "--model",
            &s(&ckpt),
            "--corpus",
            &s(&corpus),
            "--paths",
            &s(&paths),
            "--out",
            &s(&matches_out),
        ]),
        0
    );
    assert!(fs::read_to_string(&matches_out)
        .unwrap()
        .contains("\"occurrences\""));

    // Resuming from a checkpoint keeps its architecture.
    let resumed = dir.path().join("resumed.ckpt");
    assert_eq!(
        run([
            "causal-tpp",
            "train",
            "--corpus",
            &s(&corpus),
            "--out",
            &s(&resumed),
            "--init",
            &s(&ckpt),
            "--epochs",
            "2",
        ]),
        0
    );
    assert!(resumed.exists());
}

#[test]
fn gradcheck_passes_and_fails_by_tolerance() {
    assert_eq!(run(["causal-tpp", "gradcheck", "--seeds", "1"]), 0);
    // An absurd tolerance turns success into a numerical failure code.
    assert_eq!(
        run(["causal-tpp", "gradcheck", "--seeds", "1", "--tol", "1e-18"]),
        3
    );
}

#[test]
fn corrupt_checkpoint_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ckpt");
    fs::write(&bad, b"not a checkpoint at all").unwrap();
    let out = dir.path().join("out.jsonl");
    assert_eq!(
        run([
            "causal-tpp",
            "simulate",
            "--model",
            &s(&bad),
            "--out",
            &s(&out),
        ]),
        2
    );
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    fs::write(&corpus, "{\"seq_id\": 0, \"T\": oops\n").unwrap();
    let ckpt = dir.path().join("model.ckpt");
    assert_eq!(
        run([
            "causal-tpp",
            "train",
            "--corpus",
            &s(&corpus),
            "--out",
            &s(&ckpt),
        ]),
        2
    );
}

#[test]
fn generator_cycle_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let gen_path = dir.path().join("cyclic.toml");
    fs::write(
        &gen_path,
        r#"
num_types = 2
base_rates = [0.2, 0.2]
decay_rate = 1.0
horizon = 5.0

[[edges]]
from = 0
to = 1
weight = 0.5

[[edges]]
from = 1
to = 0
weight = 0.5
"#,
    )
    .unwrap();
    let out = dir.path().join("corpus.jsonl");
    assert_eq!(
        run([
            "causal-tpp",
            "gen-synthetic",
            "--generator",
            &s(&gen_path),
            "--out",
            &s(&out),
        ]),
        2
    );
}
