use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup-lab"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn example_c_reports_ln_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["example-c", "--r", "0.25", "--p", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(dir.path().join("report.json"));
    let t = report["results"]["blowup_time"].as_f64().unwrap();
    assert!((t - std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(json(dir.path().join("manifest.json"))["passed"], Value::Bool(true));
}

#[test]
fn example_e_finds_p3_and_dims_one_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["example-e", "--p", "2,2.5,3", "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let r = &json(dir.path().join("report.json"))["results"];
    assert_eq!(r["minimal_p"].as_f64(), Some(3.0));
    assert_eq!(r["dims_admitting_q"], serde_json::json!([1, 2]));
    assert_eq!(r["ladder"]["any_blowup"], Value::Bool(false));
    let csv = fs::read_to_string(dir.path().join("trace_M16.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,L2,sup"));
}

#[test]
fn example_d_at_time_zero_is_convergent() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["example-d", "--t", "0"]);
    assert!(out.status.success());
    let r = json(dir.path().join("report.json"));
    assert_eq!(r["results"]["certificates"][0]["verdict"]["verdict"], "convergent");
}

#[test]
fn exports_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(run(d.path(), &["example-b", "--jobs", "3"]).status.success());
    }
    for name in ["report.json", "onset.csv", "onset.json", "params.json", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn seed_leaves_closed_forms_alone() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(a.path(), &["example-c", "--seed", "1"]).status.success());
    assert!(run(b.path(), &["example-c", "--seed", "99"]).status.success());
    assert_eq!(
        fs::read(a.path().join("report.json")).unwrap(),
        fs::read(b.path().join("report.json")).unwrap()
    );
    // the sampled cross-check does depend on it
    let (c, d) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(c.path(), &["example-a", "--seed", "1"]).status.success());
    assert!(run(d.path(), &["example-a", "--seed", "2"]).status.success());
    assert_ne!(
        fs::read(c.path().join("norm_bounds.csv")).unwrap(),
        fs::read(d.path().join("norm_bounds.csv")).unwrap()
    );
}

#[test]
fn failed_check_exits_nonzero_with_failure_section() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["example-e", "--p", "2,2.5"]);
    assert_eq!(out.status.code(), Some(1));
    let m = json(dir.path().join("manifest.json"));
    assert_eq!(m["passed"], Value::Bool(false));
    assert!(!m["failures"].as_array().unwrap().is_empty());
}

#[test]
fn invalid_parameters_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["example-c", "--r", "0.6", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &["blowup-time", "--source", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn replay_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(a.path(), &["example-a", "--seed", "5", "--samples", "7"]).status.success());
    let record = a.path().join("params.json");
    assert!(run(b.path(), &["replay", record.to_str().unwrap()]).status.success());
    for name in ["report.json", "norm_bounds.csv", "params.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn report_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["example-d"]).status.success());
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string(&v).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&again).unwrap(), v);
}
