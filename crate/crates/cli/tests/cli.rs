use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn chanalloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chanalloc"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn run_writes_csv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("res");
    let out = chanalloc(&[
        "run", "--experiment", "convergence", "--n", "6,8", "--m", "fixed:3", "--snr-db=-10,20",
        "--t-max", "40", "--realizations", "3", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert!(csv.starts_with("experiment,n,k,m,snr_db,alpha,tau,t_max,realizations,metric,mean,std\n"));
    assert!(csv.contains("convergence,8,8,3,-10,"));
    let jsonl = fs::read_to_string(out_dir.join("realizations.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 2 * 2 * 3);
}

#[test]
fn stdout_csv_is_deterministic() {
    let args = ["run", "--experiment", "matching_check", "--n", "10", "--m", "ceil:2", "--realizations", "5", "--seed", "3"];
    let (a, b) = (chanalloc(&args), chanalloc(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, "experiment = \"lemma1_check\"\nn = [3]\nrealizations = 2\n").unwrap();
    let out = chanalloc(&["run", "--config", path.to_str().unwrap(), "--n", "2"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().skip(1).all(|l| l.starts_with("lemma1_check,2,2,")));
}

#[test]
fn trace_emits_one_record_per_iteration() {
    let out = chanalloc(&["trace", "--n", "6", "--m", "3", "--t-max", "25"]);
    assert!(out.status.success());
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 25);
    for key in ["t", "alloc", "sum_rate", "min_rate", "n_sharing", "is_pne", "resets"] {
        assert!(lines[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn errors_are_json_on_stderr() {
    let out = chanalloc(&["run", "--experiment", "nonsense", "--n", "4"]);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "invalid_config");

    let out = chanalloc(&["run", "--experiment", "convergence", "--n", "4", "--alpha", "1.5"]);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "invalid_config");

    let out = chanalloc(&["run", "--config", "/definitely/not/here.toml"]);
    assert_eq!(stderr_json(&out)["error"], "io");

    let out = chanalloc(&["frobnicate"]);
    assert_eq!(stderr_json(&out)["error"], "usage");
}
