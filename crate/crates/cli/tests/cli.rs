use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lattice-vortex"))
        .args(args)
        .env("LATTICE_VORTEX_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SINGLE: &str = r#"{"dimension": 2, "domain": {"kind": "box", "center": [0, 0], "size": 3},
    "vortices": [{"point": [0, 0], "multiplicity": 1}], "lambda": 1.0, "p": 0}"#;

#[test]
fn solve_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", SINGLE);
    let out = dir.path().join("out");
    let o = run(&["--out", out.to_str().unwrap(), "--dump-matrix", "solve", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["monotone"], true);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("k,J,sup_change,residual,l2p2_norm\n"));
    assert_eq!(trace.lines().count() as u64 - 1, summary["iterations"].as_u64().unwrap());
    let solution = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert_eq!(solution.lines().count(), 1 + 49 + 28);
    let coo = fs::read_to_string(out.join("matrix.coo")).unwrap();
    assert_eq!(coo.lines().count(), 49 + 2 * 84);
}

#[test]
fn solve_without_vortices_takes_one_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"dimension": 2, "domain": {"kind": "box", "size": 2}, "vortices": [], "lambda": 2.0, "p": 1}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["--out", out.to_str().unwrap(), "solve", &cfg]);
    assert!(o.status.success());
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["iterations"], 1);
    assert_eq!(summary["converged"], true);
    let solution = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(solution.lines().skip(1).all(|l| l.ends_with(",0.0000000000000000e0")));
}

#[test]
fn vortex_off_the_domain_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", &SINGLE.replace("[0, 0], \"multiplicity\"", "[7, 0], \"multiplicity\""));
    let out = dir.path().join("out");
    let o = run(&["--out", out.to_str().unwrap(), "solve", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"dimension": 2}"#);
    let o = run(&["--out", dir.path().join("out").to_str().unwrap(), "solve", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        &SINGLE.replace("\"p\": 0", "\"p\": 0, \"tolerances\": {\"max_outer_iterations\": 3}"),
    );
    let out = dir.path().join("out");
    let o = run(&["--out", out.to_str().unwrap(), "solve", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["converged"], false);
    assert_eq!(summary["failure"], "not_converged");
    assert_eq!(summary["iterations"], 3);
}

#[test]
fn solve_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", SINGLE);
    let mut summaries = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert!(run(&["--out", out.to_str().unwrap(), "--backend", "cg", "solve", &cfg]).status.success());
        summaries.push(fs::read(out.join("summary.json")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn bad_backend_is_a_usage_error() {
    let o = run(&["--backend", "lu", "verify"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exhaust_without_vortices_has_zero_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ex.json", r#"{"dimension": 2, "radii": [2, 4, 8], "lambda": 1.0, "p": 0}"#);
    let out = dir.path().join("out");
    let o = run(&["--out", out.to_str().unwrap(), "exhaust", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("report.json"));
    for r in report["radii"].as_array().unwrap().iter().skip(1) {
        assert_eq!(r["gap_to_previous"].as_f64(), Some(0.0));
    }
}

#[test]
fn exhaust_records_decreasing_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ex.json",
        r#"{"dimension": 2, "radii": [4, 8, 16, 32], "vortices": [{"point": [0, 0], "multiplicity": 1}],
            "lambda": 1.0, "p": 0}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["--out", out.to_str().unwrap(), "exhaust", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["certificate"]["certified"], true);
    let gaps: Vec<f64> = report["radii"].as_array().unwrap()[1..]
        .iter()
        .map(|r| r["gap_to_previous"].as_f64().unwrap())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    let decay = fs::read_to_string(out.join("decay.csv")).unwrap();
    assert!(decay.starts_with("shell_radius,sup_abs\n"));
}

#[test]
fn non_nested_radii_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ex.json", r#"{"dimension": 2, "radii": [8, 4], "lambda": 1.0, "p": 0}"#);
    let out = dir.path().join("out");
    let o = run(&["--out", out.to_str().unwrap(), "exhaust", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn verify_passes_with_defaults() {
    let o = run(&["verify", "--seed", "7", "--sizes", "2,3"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    for suite in ["maximum-principle", "green-identity", "gns-ratio", "oracle-equivalence"] {
        assert!(stdout.contains(suite));
    }
}

#[test]
fn verify_detects_a_corrupted_laplacian() {
    let o = run(&["verify", "--sizes", "2", "--fault-inject"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("green-identity"));
}

#[test]
fn verify_rejects_an_empty_size_list() {
    assert_eq!(run(&["verify", "--sizes"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--sizes", ""]).status.code(), Some(2));
}
