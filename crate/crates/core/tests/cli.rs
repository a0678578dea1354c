//! Exit codes and configuration handling of the `teamshock` binary.

use std::process::{Command, Output};

use teamshock::pipeline::PipelineConfig;

fn teamshock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teamshock")).args(args).output().expect("spawn teamshock")
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(teamshock(&["--help"]).status.code(), Some(0));
    assert_eq!(teamshock(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(teamshock(&[]).status.code(), Some(1));
}

#[test]
fn invalid_configuration_exits_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = teamshock(&["run", "--target-year", "2010", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: invalid configuration"));
    assert!(!out.exists());
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let o = teamshock(&["ingest", "--events", missing.to_str().unwrap(), "--output", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 5\nmonths = [1, 2]\nalpha = 0.1\n").unwrap();
    let o = teamshock(&["--config", cfg.to_str().unwrap(), "--print-config", "run", "--alpha", "0.2", "--months", "3,4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let printed: PipelineConfig = toml::from_str(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(printed.seed, 5);
    assert_eq!(printed.alpha, 0.2);
    assert_eq!(printed.months, vec![3, 4]);

    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(teamshock(&["--config", cfg.to_str().unwrap(), "run"]).status.code(), Some(1));
}
