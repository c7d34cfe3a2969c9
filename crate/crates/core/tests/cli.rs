//! Black-box checks of the yarrow binary: trace columns, exit codes,
//! output formats, and failure behavior.

use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_yarrow"))
}

fn jsonl(bytes: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| serde_json::from_str(l).expect("trace lines are JSON"))
        .collect()
}

fn gen_dataset(dir: &std::path::Path, seed: u64, extra: &[&str]) -> std::path::PathBuf {
    let path = dir.join(format!("data_{seed}.tsv"));
    let status = bin()
        .args(["gen", "--num-instances", "50", "--num-features", "20"])
        .args(["--rng-seed", &seed.to_string()])
        .args(extra)
        .args(["--output", path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    path
}

#[test]
fn gen_seeds_five_of_fifty_and_writes_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_dataset(dir.path(), 42, &[]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("#labels: c0,c1\n"));
    let seeded = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter(|l| !l.contains("\t?\t"))
        .count();
    assert_eq!(seeded, 5);
}

#[test]
fn gen_with_three_classes_seeds_all_of_them() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data3.tsv");
    let status = bin()
        .args(["gen", "--num-instances", "50", "--num-features", "21"])
        .args(["--num-labels", "3", "--rng-seed", "7"])
        .args(["--output", path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let label = line.split('\t').nth(1).unwrap();
        if label != "?" {
            seen.insert(label.to_string());
        }
    }
    assert_eq!(seen.len(), 3);
}

#[test]
fn gen_rejects_infeasible_configs() {
    let output = bin()
        .args(["gen", "--num-instances", "10", "--num-features", "4"])
        .args(["--edges", "9..9", "--output", "-"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("error:"));
}

#[test]
fn run_dl1_trace_has_non_increasing_k_t2() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_dataset(dir.path(), 1, &[]);
    let output = bin()
        .args(["run", "--learner", "dl1", "--max-iter", "50"])
        .args(["--input", data.to_str().unwrap(), "--output", "-"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let rows = jsonl(&output.stdout);
    assert!(!rows.is_empty());
    let k: Vec<f64> = rows.iter().map(|r| r["K_t2"].as_f64().unwrap()).collect();
    for w in k.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "K_t2 must not increase: {w:?}");
    }
    assert_eq!(rows.last().unwrap()["stop"], "fixpoint");
    assert_eq!(rows[0]["t"], 0);
}

#[test]
fn run_dl2s_trace_keeps_h_below_k_delta_and_finite() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_dataset(dir.path(), 2, &[]);
    let output = bin()
        .args(["run", "--learner", "dl2s", "--delta", "0.5"])
        .args(["--input", data.to_str().unwrap(), "--output", "-"])
        .output()
        .unwrap();
    assert!(output.status.success());
    for row in jsonl(&output.stdout) {
        let h = row["H"].as_f64().expect("H stays finite when delta > 0");
        let k = row["K_delta"].as_f64().expect("K_delta is finite");
        assert!(h <= k + 1e-9, "H={h} exceeded K_delta={k}");
    }
}

#[test]
fn run_budget_stop_still_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_dataset(dir.path(), 3, &[]);
    let output = bin()
        .args(["run", "--learner", "dl1", "--max-iter", "1"])
        .args(["--input", data.to_str().unwrap(), "--output", "-"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let rows = jsonl(&output.stdout);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["stop"], "budget");
}

#[test]
fn run_writes_labels_beside_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_dataset(dir.path(), 4, &[]);
    let trace = dir.path().join("trace.jsonl");
    let status = bin()
        .args(["run", "--input", data.to_str().unwrap()])
        .args(["--output", trace.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let labels = std::fs::read_to_string(dir.path().join("trace.labels.tsv")).unwrap();
    let mut lines = 0;
    for line in labels.lines() {
        let mut cols = line.split('\t');
        let id = cols.next().unwrap();
        let label = cols.next().unwrap();
        assert!(cols.next().is_none());
        assert!(id.starts_with('x'));
        assert!(label == "?" || label == "c0" || label == "c1");
        lines += 1;
    }
    assert_eq!(lines, 50);
    // the first instance is a seed and keeps its generated class
    assert!(labels.starts_with("x0\tc0\n"));
}

#[test]
fn missing_input_fails_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let output = bin()
        .args([
            "run",
            "--input",
            dir.path().join("absent.tsv").to_str().unwrap(),
        ])
        .args(["--output", trace.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("error:"));
    assert!(!trace.exists(), "no partial trace on failure");
}

#[test]
fn malformed_input_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.tsv");
    std::fs::write(&path, "a\t0\tf1\nbroken line without tabs\n").unwrap();
    let output = bin()
        .args(["run", "--input", path.to_str().unwrap(), "--output", "-"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 2"));
}

#[test]
fn propagate_majority_terminates_and_reports_cuts() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_dataset(dir.path(), 5, &[]);
    let output = bin()
        .args([
            "propagate",
            "--feature-op",
            "majority",
            "--instance-op",
            "majority",
        ])
        .args(["--input", data.to_str().unwrap(), "--output", "-"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let rows = jsonl(&output.stdout);
    assert!(!rows.is_empty());
    assert!(rows.len() <= 20 * 21 / 2 * (50 * 51 / 2));
    for row in &rows {
        assert!(row["cut"].as_u64().is_some(), "majority mode reports cuts");
    }
}

#[test]
fn propagate_average_converges_below_tol() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_dataset(dir.path(), 6, &[]);
    let output = bin()
        .args([
            "propagate",
            "--feature-op",
            "average",
            "--instance-op",
            "average",
        ])
        .args(["--tol", "1e-8"])
        .args(["--input", data.to_str().unwrap(), "--output", "-"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let rows = jsonl(&output.stdout);
    let last = rows.last().unwrap();
    assert!(last["max_delta"].as_f64().unwrap() < 1e-8);
    assert!(last["cut"].is_null(), "averaging modes do not report cuts");
}

#[test]
fn propagate_mixed_mode_writes_assignment_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_dataset(dir.path(), 8, &[]);
    let sweeps = dir.path().join("sweeps.jsonl");
    let status = bin()
        .args([
            "propagate",
            "--feature-op",
            "average",
            "--instance-op",
            "majority",
        ])
        .args(["--input", data.to_str().unwrap()])
        .args(["--output", sweeps.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("sweeps.assignment.tsv")).unwrap();
    let mut features = 0;
    let mut instances = 0;
    for line in text.lines() {
        let mut cols = line.split('\t');
        match cols.next().unwrap() {
            "feature" => features += 1,
            "instance" => instances += 1,
            other => panic!("unexpected node kind {other}"),
        }
        assert!(cols.next().is_some());
        let label = cols.next().unwrap();
        assert!(label == "?" || label.starts_with('c'));
    }
    assert_eq!(features, 20);
    assert_eq!(instances, 50);
}

#[test]
fn verify_suite_exit_codes_and_reports() {
    let output = bin()
        .args([
            "verify",
            "--suite",
            "lemma1",
            "--rng-seed",
            "7",
            "--output",
            "-",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let rows = jsonl(&output.stdout);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["check"], "lemma1");
    assert_eq!(rows[0]["pass"], true);
    assert!(rows[0]["worst_violation"].as_f64().unwrap() >= -1e-9);
    assert!(String::from_utf8_lossy(&output.stderr).contains("check lemma1: PASS"));

    let output = bin()
        .args(["verify", "--suite", "nonsense"])
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn verify_mismatch_prints_a_differ_witness() {
    let output = bin()
        .args(["verify", "--suite", "mismatch", "--output", "-"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let rows = jsonl(&output.stdout);
    let witness = &rows[0]["witness"]["first_witness"];
    assert!(witness["rows"].is_array());
    assert_ne!(witness["sum_argmax"], witness["log_argmin"]);
}
