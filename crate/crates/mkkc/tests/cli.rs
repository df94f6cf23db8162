//! End-to-end tests that drive the compiled `mkkc` binary: clustering
//! from CSV inputs, dataset simulation, benchmark configs, exit codes,
//! and output determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mkkc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkkc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) {
    fs::write(dir.join(name), content).expect("write fixture");
}

/// Two views of six samples in two well-separated blobs.
fn write_toy_views(dir: &Path) {
    write(
        dir,
        "a.csv",
        "0.0,0.1\n0.2,0.0\n0.1,0.2\n10.0,9.9\n10.1,10.0\n9.9,10.1\n",
    );
    write(
        dir,
        "b.csv",
        "1.0,0.9\n1.1,1.0\n0.9,1.1\n-8.0,-8.1\n-8.2,-8.0\n-7.9,-7.9\n",
    );
    write(dir, "truth.csv", "0\n0\n0\n1\n1\n1\n");
}

#[test]
fn cluster_recovers_two_blobs_and_reports_metrics() {
    let tmp = TempDir::new().expect("tempdir");
    write_toy_views(tmp.path());

    let out = mkkc(
        &[
            "cluster", "--view", "a.csv", "--view", "b.csv", "-k", "2", "--seed", "7",
            "--truth", "truth.csv", "--out-dir", "out",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let assignments = fs::read_to_string(tmp.path().join("out/assignments.csv")).expect("file");
    let labels: Vec<&str> = assignments.lines().skip(1).collect();
    assert_eq!(labels.len(), 6);
    let first: Vec<&str> = labels[..3].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    let second: Vec<&str> = labels[3..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(first.iter().all(|l| *l == first[0]));
    assert!(second.iter().all(|l| *l == second[0]));
    assert_ne!(first[0], second[0], "blobs must land in different clusters");

    let theta = fs::read_to_string(tmp.path().join("out/theta.csv")).expect("file");
    assert_eq!(theta.lines().count(), 3, "header plus one row per view");
    assert!(theta.starts_with("view,theta\n"));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/summary.json")).expect("file"))
            .expect("valid json");
    assert_eq!(summary["k"], 2);
    assert_eq!(summary["n_samples"], 6);
    assert_eq!(summary["n_views"], 2);
    assert_eq!(summary["variant"], "minmax");
    assert_eq!(summary["metrics"]["ari"], 1.0);
    assert_eq!(summary["metrics"]["purity"], 1.0);
}

#[test]
fn cluster_outputs_are_byte_identical_across_runs() {
    let tmp = TempDir::new().expect("tempdir");
    write_toy_views(tmp.path());

    for out_dir in ["run1", "run2"] {
        let out = mkkc(
            &[
                "cluster", "--view", "a.csv", "--view", "b.csv", "-k", "2", "--seed", "3",
                "--out-dir", out_dir,
            ],
            tmp.path(),
        );
        assert!(out.status.success());
    }
    for name in ["assignments.csv", "theta.csv", "summary.json"] {
        let one = fs::read(tmp.path().join("run1").join(name)).expect("file");
        let two = fs::read(tmp.path().join("run2").join(name)).expect("file");
        assert_eq!(one, two, "{name} must not vary across identical runs");
    }
}

#[test]
fn uniform_variant_reports_equal_weights() {
    let tmp = TempDir::new().expect("tempdir");
    write_toy_views(tmp.path());

    let out = mkkc(
        &[
            "cluster", "--view", "a.csv", "--view", "b.csv", "-k", "2", "--variant",
            "uniform", "--out-dir", "out",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/summary.json")).expect("file"))
            .expect("valid json");
    assert_eq!(summary["theta"], serde_json::json!([0.5, 0.5]));
}

#[test]
fn cluster_count_must_stay_below_sample_count() {
    let tmp = TempDir::new().expect("tempdir");
    write(tmp.path(), "a.csv", "0.0,0.1\n1.0,1.1\n2.0,2.1\n3.0,3.1\n");

    let out = mkkc(&["cluster", "--view", "a.csv", "-k", "4", "--out-dir", "out"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("out/summary.json").exists());
}

#[test]
fn ragged_csv_is_rejected_with_its_line_number() {
    let tmp = TempDir::new().expect("tempdir");
    write(tmp.path(), "bad.csv", "0.0,0.1\n1.0,1.1,9.9\n2.0,2.1\n");

    let out = mkkc(&["cluster", "--view", "bad.csv", "-k", "2", "--out-dir", "out"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr should point at the bad row: {stderr}");
    assert!(stderr.contains("bad.csv"), "stderr should name the file: {stderr}");
}

#[test]
fn constant_view_fails_as_degenerate() {
    let tmp = TempDir::new().expect("tempdir");
    write(tmp.path(), "flat.csv", "1.0,2.0\n1.0,2.0\n1.0,2.0\n1.0,2.0\n");

    let out = mkkc(&["cluster", "--view", "flat.csv", "-k", "2", "--out-dir", "out"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("degenerate"), "stderr: {stderr}");
}

#[test]
fn simgen_writes_three_views_for_scenario_c() {
    let tmp = TempDir::new().expect("tempdir");
    let out = mkkc(
        &[
            "simgen", "--scenario", "C", "--n-per-cluster", "10", "--seed", "5",
            "--out-dir", "sim",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    for name in ["view_1.csv", "view_2.csv", "view_3.csv", "truth.csv"] {
        assert!(tmp.path().join("sim").join(name).exists(), "{name} missing");
    }
    assert!(!tmp.path().join("sim/view_4.csv").exists());
    let truth = fs::read_to_string(tmp.path().join("sim/truth.csv")).expect("file");
    assert_eq!(truth.lines().count(), 31, "header plus 3 clusters x 10 samples");
}

#[test]
fn bench_accepts_a_config_and_runs_deterministically() {
    let tmp = TempDir::new().expect("tempdir");
    write(
        tmp.path(),
        "grid.toml",
        "scenarios = [\"B\"]\nvariants = [\"minmax\", \"uniform\"]\nmetrics = [\"ari\"]\n\
         noise = [0, 2]\nreplicates = 2\nn_per_cluster = 12\nkmeans_starts = 10\n",
    );

    for out_dir in ["b1", "b2"] {
        let out = mkkc(
            &["bench", "--config", "grid.toml", "--format", "csv", "--out-dir", out_dir],
            tmp.path(),
        );
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.starts_with("scenario,level,variant,metric,"));
    }
    let one = fs::read(tmp.path().join("b1/results.csv")).expect("file");
    let two = fs::read(tmp.path().join("b2/results.csv")).expect("file");
    assert_eq!(one, two);
}

#[test]
fn bench_rejects_unknown_config_keys_by_name() {
    let tmp = TempDir::new().expect("tempdir");
    write(tmp.path(), "grid.toml", "scenarios = [\"B\"]\nturbo = true\n");

    let out = mkkc(&["bench", "--config", "grid.toml", "--out-dir", "out"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("turbo"), "stderr should name the bad key: {stderr}");
}
