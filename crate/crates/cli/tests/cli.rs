use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn chase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chase")).args(args).env_remove("CHASE_SEED").output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const ONE_STEP: &str = r#"{"dimension": 1, "start": [1.0], "feasible_set": {"type": "whole"},
  "functions": [{"type": "quadratic", "diagonal": [2.0], "center": [0.0]}]}"#;

const LINES: &str = r#"{"dimension": 4, "start": [0.0, 0.0, 0.0, 0.0], "feasible_set": {"type": "whole"},
  "functions": [
    {"type": "subspace", "base": [1.0, 2.0, 0.0, 0.0], "basis": [[0.0, 0.0, 1.0, 0.0]],
     "inner": {"type": "quadratic", "diagonal": [2.0], "center": [0.5]}},
    {"type": "subspace", "base": [0.0, 0.0, 0.0, 3.0], "basis": [[0.6, 0.8, 0.0, 0.0]]},
    {"type": "subspace", "base": [-1.0, 0.0, 1.0, 1.0], "basis": [[0.0, 0.0, 0.0, 1.0]],
     "inner": {"type": "quadratic", "diagonal": [4.0], "center": [-2.0]}}
  ]}"#;

#[test]
fn run_writes_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "one.json", ONE_STEP);
    let out = dir.path().join("out");
    let o = chase(&["run", "--instance", &inst, "--algo", "m2m", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("run.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    assert!((s["total"].as_f64().unwrap() - 2.0 * (1.0 - golden)).abs() < 1e-9);
}

#[test]
fn compare_reports_lower_bound_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "one.json", ONE_STEP);
    let o = chase(&["compare", "--instance", &inst, "--algo", "m2m"]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((r["opt_upper_cost"].as_f64().unwrap() - 0.75).abs() < 1e-6);
    assert!(r["semantics"].as_str().unwrap().contains("lower bound"));
}

#[test]
fn schema_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "bad.json", &ONE_STEP.replace(r#"{"type": "whole"}"#, r#"{"type": "ball"}"#));
    let o = chase(&["compare", "--instance", &inst, "--algo", "cobd"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("feasible_set"));
    let o = chase(&["compare", "--instance", "/nonexistent/file.json", "--algo", "cobd"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_suites_pass() {
    for suite in ["structure", "gradbound", "reduction", "amortized"] {
        let o = chase(&["check", "--suite", suite, "--trials", "2"]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn adaptive_sweep_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = chase(&["sweep", "--adversary", "m2m", "--kappas", "8,27,64", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("points.csv")).unwrap().lines().count(), 4);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(s["fit"]["exponent"].as_f64().unwrap() > 0.8);
}

#[test]
fn reduce_preserves_costs() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "lines.json", LINES);
    let out = dir.path().join("red");
    let o = chase(&["reduce", "--instance", &inst, "--k", "1", "--algo", "cobd", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["reduced_dimension"], 3);
    assert!(out.join("reduced.json").exists());
}
