//! Golden-file tests for the command-line interface.
//!
//! Each test runs the binary on a canned command line and compares the
//! captured stdout byte for byte against a checked-in reference. Timing
//! fields are stripped before comparison; everything else, including the
//! 17-significant-digit float formatting, must match exactly.

use std::process::Command;

fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_mps-fusion"))
        .args(args)
        .env_remove("MPS_FUSION_BUDGET")
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).expect("utf8 stdout"),
        String::from_utf8(out.stderr).expect("utf8 stderr"),
        out.status.code().expect("exit code"),
    )
}

fn strip_timing(text: &str) -> String {
    text.lines()
        .filter(|l| !l.contains("wall_time_ms"))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

fn golden(name: &str) -> String {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"))
}

#[test]
fn gallery_list_matches_golden() {
    let (stdout, stderr, code) = run(&["gallery", "list"]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert_eq!(stdout, golden("gallery_list.json"));
}

#[test]
fn spectrum_z2_matches_golden() {
    let (stdout, stderr, code) = run(&["spectrum", "--gallery", "z2_family", "--param", "g=-0.5"]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert_eq!(stdout, golden("spectrum_z2.json"));
}

#[test]
fn verify_aklt_matches_golden() {
    let (stdout, stderr, code) = run(&[
        "verify",
        "--gallery",
        "aklt",
        "--n",
        "3",
        "--basis",
        "pauli2",
        "--all-branches",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert_eq!(strip_timing(&stdout), golden("verify_aklt.json"));
}

#[test]
fn usage_errors_exit_three() {
    let (_, _, code) = run(&["spectrum", "--gallery", "no_such_entry"]);
    assert_eq!(code, 3);
    let (_, _, code) = run(&["no-such-verb"]);
    assert_eq!(code, 3);
}

#[test]
fn failed_verification_exits_two() {
    let (_, stderr, code) = run(&[
        "verify",
        "--gallery",
        "z2_family",
        "--n",
        "2",
        "--tol",
        "1e-30",
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("invariant failure"));
}

#[test]
fn sampling_is_deterministic_under_a_seed() {
    let args = [
        "simulate",
        "--gallery",
        "ghz",
        "--d",
        "2",
        "--n",
        "3",
        "--mode",
        "sample",
        "--shots",
        "4",
        "--seed",
        "11",
        "--format",
        "csv",
    ];
    let (first, _, code) = run(&args);
    assert_eq!(code, 0);
    let (second, _, _) = run(&args);
    assert_eq!(first, second);
    assert_eq!(first.lines().count(), 5);
}

#[test]
fn budget_env_var_is_honored() {
    let out = Command::new(env!("CARGO_BIN_EXE_mps-fusion"))
        .args(["verify", "--gallery", "aklt", "--n", "3"])
        .env("MPS_FUSION_BUDGET", "4")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).expect("utf8");
    assert!(stderr.contains("budget"), "stderr: {stderr}");
}
