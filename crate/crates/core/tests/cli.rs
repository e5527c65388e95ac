use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn skewmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewmix")).args(args).output().expect("binary runs")
}

#[test]
fn density_prints_json_without_writing() {
    let cfg = config("mixing_cos.toml");
    let out = skewmix(&["density", "--config", cfg.to_str().unwrap(), "--no-write", "--seed", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["command"], "density");
    assert_eq!(json["seed"], 4);
}

#[test]
fn writes_into_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("coboundary_integral.toml");
    let out = skewmix(&[
        "livsic",
        "-c",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--p-max",
        "6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("livsic.json").exists() && dir.path().join("livsic.csv").exists());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["config"]["livsic"]["p_max"], 6);
    assert_eq!(json["result"]["report"]["certificate"]["valid"], true);
}

#[test]
fn exit_codes() {
    let cfg = config("mixing_cos.toml");
    let path = cfg.to_str().unwrap();
    let bad_key = skewmix(&["density", "-c", path, "--no-write", "--set", "spectral.margn=0.1"]);
    assert_eq!(bad_key.status.code(), Some(2));
    let missing = skewmix(&["density", "-c", "/nonexistent.toml", "--no-write"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_s = skewmix(&["symbol-bound", "-c", path, "--no-write", "--s", "0.5"]);
    assert_eq!(bad_s.status.code(), Some(2));
    let budget = skewmix(&["symbol-bound", "-c", path, "--no-write", "--set", "map.budget=4"]);
    assert_eq!(budget.status.code(), Some(3), "{}", String::from_utf8_lossy(&budget.stderr));
}
