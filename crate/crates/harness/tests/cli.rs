use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const WORKED: &str = r#"{
  "miners": [{"id": "p1", "power": 2}, {"id": "p2", "power": 1}],
  "coins": [{"id": "c1", "reward": 1}, {"id": "c2", "reward": 1}],
  "initial": {"p1": "c1", "p2": "c1"},
  "mode": "learn"
}"#;

fn minegame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minegame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    json(&fs::read(path).unwrap())
}

#[test]
fn learn_on_worked_example_takes_one_step() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "s.json", WORKED);
    let trace = dir.path().join("t.jsonl");
    let out = minegame(&["learn", &scenario, "--trace", trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out.stdout);
    assert_eq!(report["status"], "ok");
    assert_eq!(report["steps"], 1);
    assert_eq!(report["learn"]["final_stable"], true);
    assert_eq!(report["final_configuration"]["p1"], "c2");
    assert_eq!(report["final_configuration"]["p2"], "c1");

    let lines: Vec<Value> = fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["payoff_before"], "2/3");
    assert_eq!(lines[0]["payoff_after"], "1");
}

#[test]
fn parse_errors_exit_with_usage_code_and_field_path() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        &dir,
        "bad.json",
        r#"{"miners": [{"id": "p1", "power": "x"}], "coins": [{"id": "c1", "reward": 1}], "mode": "learn"}"#,
    );
    let out = minegame(&["run", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("miners[0].power"), "{}", stderr);
}

#[test]
fn unknown_verb_exits_with_usage_code() {
    assert_eq!(minegame(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(minegame(&["--help"]).status.code(), Some(0));
}

#[test]
fn counterexample_reports_cycle_sum() {
    let out = minegame(&["counterexample"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out.stdout)["counterexample"]["cycle_sum"], "2/3");
}

#[test]
fn design_on_generated_instance_reaches_target() {
    let dir = TempDir::new().unwrap();
    let scenario = dir.path().join("design.json");
    let scenario = scenario.to_str().unwrap();
    let gen = minegame(&["gen", "-n", "4", "-k", "2", "--mode", "design", "--seed", "7", "--out", scenario]);
    assert_eq!(gen.status.code(), Some(0));
    let document = read_json(Path::new(scenario));
    let target = document["target"].clone();

    let report_path = dir.path().join("report.json");
    let trace = dir.path().join("trace.jsonl");
    let out = minegame(&[
        "design",
        scenario,
        "--out",
        report_path.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&report_path);
    assert_eq!(report["success"], true);
    assert_eq!(report["final_configuration"], target);
    assert!(!String::from_utf8_lossy(&out.stdout).is_empty());
}

#[test]
fn design_without_target_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "s.json", WORKED);
    assert_eq!(minegame(&["design", &scenario]).status.code(), Some(1));
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = TempDir::new().unwrap();
    let scenario = dir.path().join("s.json");
    let scenario = scenario.to_str().unwrap();
    let gen = minegame(&["gen", "-n", "5", "-k", "3", "--seed", "11", "--out", scenario]);
    assert_eq!(gen.status.code(), Some(0));
    let a = minegame(&["learn", scenario, "--scheduler", "random", "--seed", "3"]);
    let b = minegame(&["learn", scenario, "--scheduler", "random", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
