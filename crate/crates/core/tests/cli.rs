use std::path::{Path, PathBuf};
use std::process::Command;

use randamp::cli::manifest::verify_manifest;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_randamp"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], out: &Path) -> (i32, String, String) {
    let o = bin().args(args).arg("--out").arg(out).output().unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn summary(dir: &Path, file: &str) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join(file)).unwrap()).unwrap()
}

#[test]
fn certify_grid_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[certify]\ndeltas = [0.0, 0.2, 0.4]\ncross_check = false\n").unwrap();
    let (code, _, err) = run(&["certify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code, 0, "{err}");
    let s = summary(dir.path(), "certify.json");
    assert_eq!(s["monotone"], true);
    assert!(s["max_optima"][0].as_f64().unwrap() <= 0.34375);
    verify_manifest(dir.path()).unwrap();
}

#[test]
fn honest_simulation_accepts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["simulate", "--config", config("simulate_honest.toml").to_str().unwrap()], dir.path());
    assert_eq!(code, 0, "{err}");
    let s = summary(dir.path(), "simulate.json");
    assert_eq!(s["estimate"]["acceptance_rate"].as_f64().unwrap(), 1.0);
    verify_manifest(dir.path()).unwrap();
}

#[test]
fn uniform_adversary_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["simulate", "--config", config("simulate_uniform.toml").to_str().unwrap()], dir.path());
    assert_eq!(code, 0, "{err}");
    let s = summary(dir.path(), "simulate.json");
    assert!(s["estimate"]["acceptance_rate"].as_f64().unwrap() < 1e-2);
}

#[test]
fn seed_and_trials_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("simulate_mixed.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["simulate", "--config", cfg.to_str().unwrap(), "--trials", "300", "--seed", "5", "--jobs", "3"];
    assert_eq!(run(&args, &a).0, 0);
    assert_eq!(run(&args[..7], &b).0, 0);
    let csv_a = std::fs::read(a.join("trials.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("trials.csv")).unwrap());
    assert_eq!(csv_a.iter().filter(|&&c| c == b'\n').count(), 301);
    let header = String::from_utf8_lossy(&csv_a).lines().next().unwrap().to_string();
    assert_eq!(header, "trial,z,accepted,z_k,output_bit,selection,realized_m,good");
}

#[test]
fn missing_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("simulate_honest.toml")).unwrap().replace("mu = 0.9\n", "");
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, text).unwrap();
    let (code, _, err) = run(&["simulate", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(code, 2);
    assert!(err.contains("missing field `mu`"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[certify]\ndeltas = [0.0]\ndelta = 0.1\n").unwrap();
    let (code, _, err) = run(&["certify", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(code, 2);
    assert!(err.contains("unknown field `delta`"), "{err}");
}

#[test]
fn bounds_table_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["bounds", "--config", config("bounds.toml").to_str().unwrap()], dir.path());
    assert_eq!(code, 0);
    assert!(out.contains("0.0025"));
    assert!(!out.contains("inf"));
    assert!(std::fs::read_to_string(dir.path().join("bounds.txt")).unwrap().contains("noise tolerance"));
    let cfg = dir.path().join("mu1.toml");
    std::fs::write(&cfg, "[bounds]\nepsilon = 0.0\ndelta = 0.8\nmu = 1.0\nk = 10\nt = 2.0\n").unwrap();
    let (code, _, err) = run(&["bounds", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(code, 2);
    assert!(err.contains("mu"), "{err}");
}

#[test]
fn definetti_and_quantum_check() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) =
        run(&["definetti", "--config", config("definetti.toml").to_str().unwrap()], &dir.path().join("d"));
    assert_eq!(code, 0, "{err}");
    let s = summary(&dir.path().join("d"), "definetti.json");
    assert_eq!(s["pass"], true);
    let (code, _, err) =
        run(&["quantum-check", "--config", config("quantum_check.toml").to_str().unwrap()], &dir.path().join("q"));
    assert_eq!(code, 0, "{err}");
    let s = summary(&dir.path().join("q"), "quantum-check.json");
    assert!((s["configured_bell_value"].as_f64().unwrap() - 0.01).abs() < 1e-12);
}

#[test]
fn definetti_recursion_too_large_is_guarded() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("definetti.toml"))
        .unwrap()
        .replace("uses = [1, 8]", "uses = { epsilon = 0.0, k = 2, t = 2.0 }");
    let cfg = dir.path().join("big.toml");
    std::fs::write(&cfg, text).unwrap();
    let (code, _, err) = run(&["definetti", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(code, 2);
    assert!(err.contains("too large"), "{err}");
}

#[test]
fn tampered_output_fails_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["quantum-check"], dir.path());
    assert_eq!(code, 0);
    verify_manifest(dir.path()).unwrap();
    std::fs::write(dir.path().join("quantum-check.json"), b"{}").unwrap();
    assert!(verify_manifest(dir.path()).is_err());
}
