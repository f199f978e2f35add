//! The binary's contract: exit codes, report layout, CSV side files and
//! reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_lenstrans");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn fixture_arg(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn validate_exit_codes() {
    let out = run(&["validate", "--config", &fixture_arg("diagonal.json")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"]["passed"], true);

    let out = run(&["validate", "--config", &fixture_arg("invalid_weights.json")]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("coprime"));

    let out = run(&["validate", "--config", &fixture_arg("invalid_congruence.json")]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("-1") && err.contains("mod 3"), "{err}");

    let out = run(&["validate", "--config", &fixture_arg("corrupted.json")]);
    assert_eq!(code(&out), 3);
}

#[test]
fn schema_errors_name_the_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        "{\n  \"setting\": {\"n\": 2, \"k\": 3},\n  \"solver\": {\"residual_tol\": \"tiny\"}\n}\n",
    )
    .unwrap();
    let out = run(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("solver.residual_tol") && err.contains("line 3"), "{err}");

    let out = run(&[
        "validate",
        "--config",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let out = run(&["scan"]);
    assert_eq!(code(&out), 1);
    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn report_has_the_stable_top_level_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id.json");
    let out = run(&[
        "scan",
        "--config",
        &fixture_arg("identity.json"),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let report = read_json(&path);
    let keys: Vec<&String> = report.as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        [
            "diagnostics",
            "provenance",
            "records",
            "setting",
            "shift_clusters",
            "verdict"
        ]
    );
    assert_eq!(report["verdict"]["degenerate"], true);
    assert_eq!(report["verdict"]["status"], "ATTENTION");
    // Tolerances are echoed from the resolved config.
    assert_eq!(report["setting"]["solver"]["residual_tol"], 1e-8);
    assert_eq!(report["setting"]["solver"]["direct"]["sphere_points"], 32);
    assert_eq!(report["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn csv_output_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("diag.csv");
    let out = run(&[
        "scan",
        "--config",
        &fixture_arg("identity.json"),
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let records = std::fs::read_to_string(&path).unwrap();
    assert!(records.starts_with("source,tau,residual,re_0,im_0,re_1,im_1\n"));
    let hist = std::fs::read_to_string(dir.path().join("diag.tau_hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 101);
    let decay = std::fs::read_to_string(dir.path().join("diag.residual_decay.csv")).unwrap();
    assert!(decay.starts_with("iteration,residual\n"));

    let out = run(&["scan", "--config", &fixture_arg("identity.json"), "--format", "csv"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn scan_reports_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (threads, path) in [("1", &a), ("3", &b)] {
        let out = run(&[
            "scan",
            "--config",
            &fixture_arg("diagonal.json"),
            "--seed",
            "7",
            "--threads",
            threads,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(read_json(&a)["provenance"]["seed"], 7);
}

#[test]
fn index_jump_windows_and_errors() {
    let out = run(&["index-jump", "--config", &fixture_arg("diagonal.json")]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"]["jump"], 8);

    let out = run(&[
        "index-jump",
        "--config",
        &fixture_arg("diagonal.json"),
        "--t0",
        "0.5",
        "--t1",
        "0.5",
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"]["jump"], 0);

    let out = run(&[
        "index-jump",
        "--config",
        &fixture_arg("diagonal.json"),
        "--t0",
        "-0.5",
        "--t1",
        "1",
    ]);
    assert_eq!(code(&out), 0);

    // Nonlinear factors.
    let out = run(&["index-jump", "--config", &fixture_arg("perturbed.json")]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported"));
    // A discriminant point: the form degenerates.
    let out = run(&[
        "index-jump",
        "--config",
        &fixture_arg("diagonal.json"),
        "--t0",
        "0",
        "--t1",
        "0.15",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bounds_command() {
    let out = run(&["bounds", "--p", "5", "--n", "3"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["diagnostics"]["cat_lens"], 6);
    assert_eq!(report["diagnostics"]["ls_bound_even"], 12);
    assert_eq!(report["diagnostics"]["ls_bound_odd"], 11);
    assert_eq!(report["verdict"]["shift_bound"], 6);

    assert_eq!(code(&run(&["bounds", "--p", "2", "--n", "2"])), 1);
    assert_eq!(code(&run(&["bounds", "--p", "9", "--n", "2"])), 1);
}

#[test]
fn corrupted_factor_is_flagged_by_crosscheck() {
    let out = run(&["crosscheck", "--config", &fixture_arg("corrupted.json")]);
    assert_eq!(code(&out), 3);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["diagnostics"]["flagged_factors"], serde_json::json!([1]));
}

#[test]
fn sharpness_demo_rejects_large_n() {
    assert_eq!(code(&run(&["sharpness-demo", "--p", "3", "--n", "4"])), 1);
}

#[test]
fn unperturbed_sharpness_demo_shows_circle_families() {
    let out = run(&["sharpness-demo", "--p", "3", "--n", "1", "--unperturbed"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"]["status"], "ATTENTION");
    assert_eq!(report["verdict"]["families"], 1);
}
