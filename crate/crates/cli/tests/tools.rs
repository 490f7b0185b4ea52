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

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn blowup_time_of_square() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["blowup-time", "--source", "s_squared", "--z0", "2"]).status.success());
    let t = report(dir.path())["results"]["time"].as_f64().unwrap();
    assert!((t - 0.5).abs() < 1e-9);
}

#[test]
fn classify_sources() {
    for (source, holds) in [("example_d", true), ("example_c", true), ("s_squared", false)] {
        let dir = tempfile::tempdir().unwrap();
        assert!(run(dir.path(), &["classify", "--source", source]).status.success());
        assert_eq!(report(dir.path())["results"]["no_blowup"], Value::Bool(holds), "{source}");
    }
}

#[test]
fn growth_check_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["growth-check", "--source", "example_d", "--p", "2,3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("holds"));
    let csv = fs::read_to_string(dir.path().join("growth.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "p,holds,asymptotic_ok,ratio");
    assert!(rows[2].starts_with("3.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0"));
}

#[test]
fn rd_run_heat_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["rd-run", "--source", "one", "--data", "constant:0", "--nodes", "51", "--theta", "1", "--dt", "0.01", "--horizon", "3"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let params: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("params.json")).unwrap()).unwrap();
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,L2,sup"));
    let sup: f64 = csv.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((sup - 0.125).abs() < 1e-3, "{sup}");
    // the recorded setup is itself a valid config file
    let cfg = dir.path().join("setup.json");
    fs::write(&cfg, serde_json::to_string(&params["params"]).unwrap()).unwrap();
    let again = tempfile::tempdir().unwrap();
    assert!(run(again.path(), &["rd-run", "--config", cfg.to_str().unwrap()]).status.success());
    assert_eq!(
        fs::read(dir.path().join("trace.csv")).unwrap(),
        fs::read(again.path().join("trace.csv")).unwrap()
    );
}

#[test]
fn rd_run_example_d_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["rd-run", "--truncation", "16", "--horizon", "0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(report(dir.path())["results"]["completed"], Value::Bool(true));
}

#[test]
fn crank_nicolson_on_graded_mesh_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["rd-run", "--theta", "0.5", "--horizon", "0.01"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
}
