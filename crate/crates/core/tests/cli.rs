//! Command-line exit codes and outputs.

use std::process::Command;

fn paxsat() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paxsat"))
}

#[test]
fn unknown_variant_is_a_config_error() {
    let out = paxsat().args(["fit", "--variant", "col9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown variant"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = paxsat().args(["fit", "--config", "/nonexistent/paxsat.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, format!("[data]\nsource = \"ingest\"\ninput_dir = \"{}\"\n", dir.path().join("none").display())).unwrap();
    let out = paxsat()
        .args(["ingest", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("join"));
}

#[test]
fn non_convergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[data]\nn_respondents = 1500\n[fit]\nmax_iter = 1\n").unwrap();
    let out = paxsat()
        .args(["fit", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = paxsat()
        .args(["generate", "--seed", "3", "--threads", "1", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(m.contains("seed = 3") && m.contains("data/surveys.csv"));
}
