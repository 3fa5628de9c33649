use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topic-score"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fit_tiny(out: &Path, extra: &[&str]) -> Output {
    let corpus = data("tiny.uci");
    let mut args = vec![
        "fit",
        "--corpus",
        corpus.to_str().unwrap(),
        "--k",
        "2",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn fit_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = fit_tiny(dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["A_hat.csv", "pi_hat.csv", "diagnostics.json", "preprocess_report.json", "scree.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let a = read_matrix(&dir.path().join("A_hat.csv"));
    assert_eq!(a.len(), 20);
    assert!(a.iter().all(|r| r.len() == 2));
    for c in 0..2 {
        let s: f64 = a.iter().map(|r| r[c]).sum();
        assert!((s - 1.0).abs() <= 1e-9);
    }
    let diag: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["k"], 2);
    assert_eq!(diag["threshold"], "inf");
    assert!(diag.get("timing").is_none());
}

#[test]
fn fit_recovers_the_two_fixture_topics() {
    let dir = tempfile::tempdir().unwrap();
    let out = fit_tiny(dir.path(), &["--seed", "3"]);
    assert!(out.status.success());
    let a = read_matrix(&dir.path().join("A_hat.csv"));
    // The fixture's first ten words belong to one topic, the rest to the other.
    let first: f64 = a[..10].iter().map(|r| r[0]).sum();
    let other: f64 = a[..10].iter().map(|r| r[1]).sum();
    assert!((first - other).abs() > 0.5, "{first} vs {other}");
}

#[test]
fn fit_csv_with_vocab_and_stopwords() {
    let dir = tempfile::tempdir().unwrap();
    let stop = dir.path().join("stop.txt");
    fs::write(&stop, "apple\nengine\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "fit",
        "--corpus",
        data("tiny.csv").to_str().unwrap(),
        "--format",
        "csv",
        "--vocab",
        data("tiny.vocab").to_str().unwrap(),
        "--stopwords",
        stop.to_str().unwrap(),
        "--k",
        "2",
        "--t",
        "3.5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_matrix(&out_dir.join("A_hat.csv")).len(), 18);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("preprocess_report.json")).unwrap()).unwrap();
    assert_eq!(report["removed_words"][0], serde_json::json!([0, "stopword"]));
}

#[test]
fn fit_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(fit_tiny(a.path(), &["--seed", "9"]).status.success());
    assert!(fit_tiny(b.path(), &["--seed", "9"]).status.success());
    for f in ["A_hat.csv", "pi_hat.csv", "diagnostics.json", "preprocess_report.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn record_timing_adds_timing() {
    let dir = tempfile::tempdir().unwrap();
    assert!(fit_tiny(dir.path(), &["--record-timing"]).status.success());
    let diag: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    assert!(diag["timing"]["wall_time_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn invalid_k_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = data("tiny.uci");
    let out = run(&["fit", "--corpus", corpus.to_str().unwrap(), "--k", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "invalid_k");
}

#[test]
fn missing_corpus_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fit", "--corpus", "/nonexistent/c.uci", "--k", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "io");
}

fn synth(out: &Path, reps: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        "synth", "--p", "60", "--n", "60", "--big-n", "300", "--k", "3", "--m-p", "3", "--delta-p",
        "0.02", "--m-n", "3", "--seed", "4", "--reps", reps, "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn synth_writes_results_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth(dir.path(), "3", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("rep,loss,wall_time_ms"));
    let losses: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(losses.len(), 3);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    let mean = losses.iter().sum::<f64>() / 3.0;
    assert!((summary["mean_loss"].as_f64().unwrap() - mean).abs() <= 1e-12);
    assert_eq!(summary["config"]["p"], 60);
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(synth(a.path(), "2", &[]).status.success());
    assert!(synth(b.path(), "2", &[]).status.success());
    for f in ["results.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn synth_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(synth(dir.path(), "0", &[]).status.code(), Some(2));
    let out = run(&[
        "synth", "--k", "3", "--delta-p", "0.5", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "infeasible_config");
}

#[test]
fn oracle_check_passes_on_default_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["oracle-check", "--k", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cloud = read_matrix(&dir.path().join("pointcloud.csv"));
    assert_eq!(cloud.len(), 100);
    assert!(cloud.iter().all(|r| r.len() == 3));
    assert_eq!(cloud.iter().filter(|r| r[2] == 1.0).count(), 15);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("oracle.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(read_matrix(&dir.path().join("vertices.csv")).len(), 3);
}

#[test]
fn oracle_check_rejects_missing_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["oracle-check", "--k", "3", "--m-p", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
