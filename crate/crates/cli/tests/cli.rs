use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaussmanin"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> (Output, Option<Value>) {
    let out = bin().args(args).output().expect("binary runs");
    let report = serde_json::from_slice(&out.stdout).ok();
    (out, report)
}

fn status(report: &Value, name: &str) -> String {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))["status"]
        .as_str()
        .unwrap()
        .to_string()
}

#[test]
fn verify_bundled_example() {
    let (out, report) = run(&["verify", "--config", config("n2k1.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = report.unwrap();
    assert_eq!(report["version"], "report_v1");
    assert_eq!(report["overall"], "pass");
    assert_eq!(report["data"]["dim"], 1);
}

#[test]
fn solve_reports_exact_worked_values() {
    let (out, report) = run(&["solve", "--config", config("n3k2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = report.unwrap();
    assert_eq!(report["data"]["exact"]["hess"], "243");
    assert_eq!(report["data"]["exact"]["p"], serde_json::json!(["-3", "-3", "3"]));
    assert_eq!(report["data"]["points"].as_array().unwrap().len(), 1);
}

#[test]
fn gen_then_verify_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let (out, _) = run(&["gen", "--n", "5", "--k", "2", "--seed", "3", "--out", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"spec_file": "spec.json"}"#).unwrap();
    let (out, report) = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report.unwrap()["data"]["dim"], 6);
    let (out, report) = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report.unwrap()["data"]["points"].as_array().unwrap().len(), 6);
}

#[test]
fn discriminant_skips_algebra_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("delta.json");
    std::fs::write(&cfg, r#"{"spec": {"n": 2, "k": 1, "b": [[1], [1]], "a": [1, 1]}, "z": [1, 1]}"#).unwrap();
    let (out, report) = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = report.unwrap();
    assert_eq!(status(&report, "commutators"), "skipped");
    assert_eq!(status(&report, "plucker_relations"), "pass");
    let (out, _) = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let (out, _) = run(&["verify", "--n", "5", "--k", "2"]);
    assert_eq!(out.status.code(), Some(2), "random spec without a seed");
    let (out, _) = run(&["verify", "--config", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(2));
    let (out, _) = run(&["verify", "--config", config("n2k1.json").to_str().unwrap(), "--tol-fd", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let (out, _) = run(&["bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_check_exits_1() {
    let (out, report) = run(&["solve", "--config", config("n3k2.json").to_str().unwrap(), "--tol-fd", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let report = report.unwrap();
    assert_eq!(report["overall"], "fail");
    assert_eq!(status(&report, "projection_jacobian_fd"), "fail");
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("r{i}.json"));
        let (status, _) = run(&[
            "flows",
            "--n",
            "4",
            "--k",
            "2",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(status.status.code(), Some(0));
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timing_ms");
        texts.push(v.to_string());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn seed_flag_overrides_config() {
    let base = config("n5k2.json");
    let (_, a) = run(&["verify", "--config", base.to_str().unwrap(), "--seed", "21"]);
    let (_, b) = run(&["verify", "--config", base.to_str().unwrap()]);
    let (a, b) = (a.unwrap(), b.unwrap());
    assert_eq!(a["config"]["seed"], 21);
    assert_ne!(a["config"]["spec"], b["config"]["spec"]);
}
