use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"{
    "regime": "exponential",
    "market": {"T": 1, "delta": 0.1, "x0": 5, "z0": 1},
    "distribution": {"classes": [{"mu": 0.2, "sigma": 0.2, "beta": 0.3, "theta": 1}], "weights": [1]},
    "grid": {"n_steps": 100},
    "simulation": {"n_values": [16, 64, 256], "replications": 30, "seed": 3, "probe_replications": 8}
}"#;

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfg-habitat"))
        .args(args)
        .current_dir(dir)
        .env_remove("MFG_HABITAT_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn invalid_exponent_exits_nonzero_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("exponential", "power").replace("\"beta\": 0.3", "\"p\": 1.2"));
    let out = bin(&["solve", "--config", &cfg, "--out", "run"], dir.path());
    assert!(!out.status.success());
    let err: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/error.json")).unwrap()).unwrap();
    assert_eq!(err["field"], "distribution.classes[0].risk");
    assert!(String::from_utf8_lossy(&out.stderr).contains("distribution.classes[0].risk"));
}

#[test]
fn converge_minimal_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    for out in ["a", "b"] {
        let o = bin(&["converge", "--config", &cfg, "--out", out, "--threads", "2"], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read_to_string(dir.path().join("a/convergence.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b/convergence.csv")).unwrap());
    assert_eq!(a.lines().count(), 4);
    let s: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert!(s["sup_z_mse"]["slope"].as_f64().unwrap().is_finite());
    assert_eq!(s["seed"], 3);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    assert!(bin(&["converge", "--config", &cfg, "--out", "a"], dir.path()).status.success());
    assert!(bin(&["converge", "--config", &cfg, "--out", "b", "--seed", "99"], dir.path()).status.success());
    let a = fs::read_to_string(dir.path().join("a/convergence.csv")).unwrap();
    assert_ne!(a, fs::read_to_string(dir.path().join("b/convergence.csv")).unwrap());
}

#[test]
fn preset_writes_one_directory_per_leg_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    for _ in 0..2 {
        let o = bin(&["preset", "fig1-low", "--out", "f1", "--grid", "200"], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = fs::read(dir.path().join("f1/sweep.csv")).unwrap();
    for leg in ["risk_0.2", "risk_0.3", "risk_0.5"] {
        assert!(dir.path().join("f1").join(leg).join("equilibrium.csv").is_file());
    }
    let o = bin(&["preset", "fig1-low", "--out", "f1", "--grid", "200"], dir.path());
    assert!(o.status.success());
    assert_eq!(first, fs::read(dir.path().join("f1/sweep.csv")).unwrap());
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 1 + 3 * 201);
}

#[test]
fn preset_exponential_analogue_and_rejection() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["preset", "fig4-hetero", "--regime", "exponential", "--out", "f4"], dir.path());
    assert!(o.status.success());
    let head = fs::read_to_string(dir.path().join("f4/equilibrium.csv")).unwrap();
    assert!(head.starts_with("t,zbar,mean_consumption,pi_star_1,pi_star_2,"));
    let o = bin(&["preset", "fig5-lowwealth", "--regime", "exponential", "--out", "f5"], dir.path());
    assert!(!o.status.success());
    assert!(dir.path().join("f5/error.json").is_file());
    let o = bin(&["preset", "fig9", "--out", "f9"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn sweep_needs_a_sweep_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    assert!(!bin(&["sweep", "--config", &cfg, "--out", "s"], dir.path()).status.success());
    let with = CONFIG.replace("\"grid\"", "\"sweep\": {\"parameter\": \"z0\", \"values\": [1, 10]}, \"grid\"");
    let cfg = write_config(dir.path(), &with);
    let o = bin(&["sweep", "--config", &cfg, "--out", "s"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("s/sweep.csv").is_file());
}

#[test]
fn missing_config_and_bad_thread_env() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["solve", "--out", "x"], dir.path());
    assert!(!o.status.success());
    assert!(dir.path().join("x/error.json").is_file());
    let cfg = write_config(dir.path(), CONFIG);
    let o = Command::new(env!("CARGO_BIN_EXE_mfg-habitat"))
        .args(["solve", "--config", &cfg, "--out", "y"])
        .current_dir(dir.path())
        .env("MFG_HABITAT_THREADS", "lots")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("MFG_HABITAT_THREADS"));
}

#[test]
fn outputs_field_sets_default_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("\"grid\"", "\"outputs\": \"from-config\", \"grid\""));
    assert!(bin(&["solve", "--config", &cfg], dir.path()).status.success());
    assert!(dir.path().join("from-config/equilibrium.csv").is_file());
}
