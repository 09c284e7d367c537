//! End-to-end runs of the `ricci-lab` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ricci-lab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn space_build_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cycle.json");
    assert_eq!(code(&lab(&["space", "build", "--builder", "cycle", "--n", "8", "--out", path(&file)])), 0);
    let out = lab(&["space", "validate", path(&file)]);
    assert_eq!(code(&out), 0);
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["pass"], Value::Bool(true));
    assert_eq!(summary["n"], 8);

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"x": 1}"#).unwrap();
    assert_eq!(code(&lab(&["space", "validate", path(&broken)])), 2);
}

#[test]
fn exit_codes_follow_the_battery_outcome() {
    assert_eq!(code(&lab(&["verify", "bakry_emery", "--builder", "two-point", "-K", "4"])), 0);
    let over = lab(&["verify", "bakry_emery", "--builder", "two-point", "-K", "10"]);
    assert_eq!(code(&over), 1);
    assert!(String::from_utf8_lossy(&over.stderr).contains("FAIL"));
    assert_eq!(code(&lab(&["verify", "battery", "--builder", "cycle", "--n", "8"])), 0);
    assert_eq!(code(&lab(&["verify", "battery", "--space-file", "/nonexistent/space.json"])), 2);
}

#[test]
fn configuration_files_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("bogus.json");
    std::fs::write(&bogus, r#"{"space": {"builder": "two_point"}, "bogus": 1}"#).unwrap();
    let out = lab(&["verify", "battery", "--config", path(&bogus)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let config = dir.path().join("two.json");
    std::fs::write(&config, r#"{"space": {"builder": "two_point"}, "K": 10}"#).unwrap();
    assert_eq!(code(&lab(&["verify", "bakry_emery", "--config", path(&config)])), 1);
    assert_eq!(code(&lab(&["verify", "bakry_emery", "--config", path(&config), "-K", "4"])), 0);
    let strict = lab(&["verify", "bakry_emery", "--config", path(&config), "--strict-config", "-K", "4"]);
    assert_eq!(code(&strict), 1);
    assert!(String::from_utf8_lossy(&strict.stderr).contains("warning"));
}

#[test]
fn reports_validate_and_rerun_identically() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let args = ["verify", "battery", "--builder", "two-point", "--out", path(&report)];
    assert_eq!(code(&lab(&args)), 0);
    assert_eq!(code(&lab(&["report", "validate", path(&report)])), 0);

    let rerun = dir.path().join("rerun.json");
    assert_eq!(code(&lab(&["report", "rerun", path(&report), "--out", path(&rerun)])), 0);
    assert_eq!(std::fs::read(&report).unwrap(), std::fs::read(&rerun).unwrap());

    let mut v: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    v["summary"]["passed"] = Value::from(0);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, v.to_string()).unwrap();
    assert_eq!(code(&lab(&["report", "validate", path(&tampered)])), 1);
}

#[test]
fn kernel_and_transport_exports() {
    let out = lab(&["kernel", "--builder", "two-point", "--t", "0.5", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = v["p"].as_array().expect("kernel matrix");
    assert_eq!(p.len(), 2);

    let out = lab(&["transport", "--builder", "cycle", "--n", "6"]);
    assert_eq!(code(&out), 0);
    assert!(!out.stdout.is_empty());
}
