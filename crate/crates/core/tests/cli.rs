use std::path::Path;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn specinfo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specinfo")).args(args).output().expect("spawn specinfo")
}

fn code(args: &[&str]) -> i32 {
    specinfo(args).status.code().expect("exit code")
}

#[test]
fn capacity_succeeds() {
    let out = specinfo(&["capacity", "--channel", &data("bsc01.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["run"]["tool"], "specinfo");
    assert!(v["run"].get("watermark").is_none());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["capacity", "--bogus"]), 1);
    assert_eq!(code(&["net"]), 1);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn preconditions_exit_two() {
    let out = specinfo(&["stabilize", "--channel", &data("bsc01.json"), "--n", "20", "--alpha", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n >= 27") && err.contains("0.1803"), "{err}");
    assert_eq!(code(&["capacity", "--channel", "/nonexistent/channel.json"]), 2);
}

#[test]
fn resource_cap_exits_four() {
    assert_eq!(code(&["spectrum", "--pmf", &data("skewed.json"), "--lambda", "0.5", "--n", "40", "--cap-types", "10"]), 4);
}

#[test]
fn unsafe_runs_are_watermarked() {
    let out = specinfo(&["--unsafe", "stabilize", "--channel", &data("bsc01.json"), "--n", "8", "--alpha", "0.5"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["run"]["watermark"].as_str().unwrap().starts_with("UNSAFE"));
    assert_ne!(out.status.code(), Some(2));
}

#[test]
fn out_dir_gets_manifest_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let out = specinfo(&["--out", &d, "--seed", "3", "net", "--eps", "0.3", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(!manifest["artifacts"].as_array().unwrap().is_empty());
    let csv = std::fs::read_to_string(dir.path().join("net-gaps.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    assert!(csv.contains("sample,gap"));
}
