use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    run_with_stdin(args, "")
}

fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_motivic-forge"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

const RES: &str = r#"{"name": "A1", "gorenstein_index": 2, "divisors": [{"label": "E", "discrepancy": "-1/2"}]}"#;

#[test]
fn motivic_expression_report() {
    let out = run(&["--json", "--seed", "11", "motivic", "(L-1)*L^-3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], "motivic-forge/1");
    assert_eq!(v["seed"], 11);
    assert_eq!(v["ok"], true);
    assert_eq!(v["canonical"], "L^-2 - L^-3");
}

#[test]
fn parse_errors_exit_two_with_offset() {
    let out = run(&["motivic", "L^(1/"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset 4"));
    let out = run(&["--json", "motivic", "L^(1/"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["ok"], false);
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(run(&["jets", "count", "--r", "2", "--n", "1", "--q", "4"]).status.code(), Some(2));
    assert_eq!(run(&["jets", "count", "--r", "2"]).status.code(), Some(2));
    assert_eq!(run(&["verify-cov", "--case", "nowhere"]).status.code(), Some(2));
    assert_eq!(run(&["resolve", "--in", "-"]).status.code(), Some(2));
}

#[test]
fn jet_count_both_methods() {
    let out = run(&["--json", "jets", "count", "--r", "2", "--n", "1", "--q", "2", "--method", "both"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["value"], "1/2");
    assert_eq!(v["symbolic_value"], "1/2");
    assert_eq!(v["match"], true);
}

#[test]
fn verify_cov_recovers_coefficient() {
    let out = run(&["--json", "verify-cov", "--case", "lemma83", "--r", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["coefficient"], "-1");
    assert_eq!(v["ok"], true);
    let out = run(&["--json", "verify-cov", "--case", "example82"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["coefficient"], "-1");
}

#[test]
fn resolve_conventions() {
    let out = run_with_stdin(&["--json", "resolve", "--in", "-", "--convention", "certificate"], RES);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["crepant"], true);
    assert_eq!(v["factors"][0]["r"], 1);
    assert_eq!(v["factors"][0]["d"], 2);
    assert_eq!(v["certificate"][0]["lhs"], "0");
    let out = run_with_stdin(&["--json", "resolve", "--in", "-", "--convention", "paper-literal"], RES);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["crepant"], false);
    assert_eq!(v["certificate"][0]["lhs"], "-1");
}

#[test]
fn height_profile_of_hand_arc() {
    let arc = r#"{"family": "slr", "r": 2, "matrix": [["t", "0"], ["0", "1"]]}"#;
    let out = run(&["--json", "heights", "profile", "--arc", arc, "--k", "D'=-1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["heights"]["ht1"], 1);
    assert_eq!(v["identity"]["passes"], true);
}

#[test]
fn seeded_batches_are_byte_identical() {
    let args = ["--json", "--seed", "42", "heights", "batch", "--r", "2", "--count", "12"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["seed"], 42);
    let c = run(&["--json", "--seed", "43", "heights", "batch", "--r", "2", "--count", "12"]);
    assert_ne!(a.stdout, c.stdout);
}
