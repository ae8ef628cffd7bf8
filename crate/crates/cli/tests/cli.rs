use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bolax_cli::config::{parse_config, parse_config_str, InitialData, Overrides, DEFAULT_OUT, OUT_ENV};
use bolax_cli::{EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_PASS};
use serde_json::Value;
use tempfile::TempDir;

fn bolax(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bolax"))
        .args(args)
        .current_dir(dir)
        .env_remove(OUT_ENV)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_config_takes_documented_defaults() {
    let cfg = parse_config_str(r#"{"lattice": {"n_max": 32, "rho": 0.5}}"#).unwrap();
    assert_eq!(cfg.lattice.s, 1.0);
    assert_eq!(cfg.dt, 1e-3);
    assert_eq!(cfg.t_end, 1.0);
    assert_eq!(cfg.record_every, 50);
    assert_eq!(cfg.kappas, vec![250.0, 500.0, 1000.0, 2000.0]);
    assert_eq!(cfg.seed, 1);
    assert_eq!(cfg.initial, InitialData::Standard);
    assert_eq!(cfg.tolerances.constants, 1e-10);
    assert!(cfg.output_dir.is_none());
    cfg.validate().unwrap();
}

#[test]
fn unknown_key_is_named_with_position() {
    let err = parse_config_str("{\n  \"lattice\": {\"n_max\": 8, \"rho\": 0.5},\n  \"kapa\": 3\n}")
        .unwrap_err()
        .to_string();
    assert!(err.contains("kapa"), "{err}");
    assert!(err.contains("line 3"), "{err}");

    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", r#"{"lattice": {"n_max": 8, "rho": 0.5}, "kapa": 3}"#);
    let out = bolax(&["simulate", "--config", "c.json"], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG as i32));
    assert!(stderr(&out).contains("kapa"));
}

#[test]
fn nested_unknown_key_is_rejected() {
    let err = parse_config_str(r#"{"lattice": {"n_max": 8, "rho": 0.5, "sigma": 1}}"#).unwrap_err();
    assert!(err.to_string().contains("sigma"));
}

#[test]
fn out_of_range_values_name_the_field() {
    let tmp = TempDir::new().unwrap();
    let p = write(tmp.path(), "c.json", r#"{"lattice": {"n_max": 8, "rho": 0.5}, "dt": -1}"#);
    let err = parse_config(&p, &Overrides::default()).unwrap_err().to_string();
    assert!(err.contains("`dt`"), "{err}");
    let p = write(tmp.path(), "d.json", r#"{"lattice": {"n_max": 8, "rho": 0.5}, "kappas": [200, 100]}"#);
    let err = parse_config(&p, &Overrides::default()).unwrap_err().to_string();
    assert!(err.contains("`kappas`"), "{err}");
}

#[test]
fn flags_override_the_file() {
    let tmp = TempDir::new().unwrap();
    let p = write(
        tmp.path(),
        "c.json",
        r#"{"lattice": {"n_max": 8, "rho": 0.5}, "dt": 0.01, "output_dir": "from-file",
            "flow": {"kind": "h_kappa", "kappa": 50}}"#,
    );
    let o = Overrides {
        dt: Some(0.002),
        n_max: Some(12),
        kappa: vec![100.0, 300.0],
        out: Some("from-flag".into()),
        ..Default::default()
    };
    let cfg = parse_config(&p, &o).unwrap();
    assert_eq!(cfg.dt, 0.002);
    assert_eq!(cfg.lattice.n_max, 12);
    assert_eq!(cfg.kappas, vec![100.0, 300.0]);
    assert_eq!(cfg.flow, bolax_cli::config::FlowSpec::HKappa { kappa: Some(300.0) });
    assert_eq!(cfg.output_dir(), PathBuf::from("from-flag"));

    let cfg = parse_config(&p, &Overrides::default()).unwrap();
    assert_eq!(cfg.output_dir(), PathBuf::from("from-file"));
}

#[test]
fn dt_flag_reaches_the_run() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", r#"{"lattice": {"n_max": 8, "rho": 0.5}, "t_end": 0.1, "record_every": 10}"#);
    let out = bolax(&["simulate", "--config", "c.json", "--dt", "0.005"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(tmp.path().join(DEFAULT_OUT).join("simulate.csv")).unwrap();
    let times: Vec<f64> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    // 20 steps of 0.005, recorded every 10
    assert_eq!(times.len(), 3);
    assert!((times[1] - 0.05).abs() < 1e-12);
}

#[test]
fn env_var_sets_output_dir_below_the_flag() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", r#"{"lattice": {"n_max": 8, "rho": 0.5}}"#);
    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_bolax"))
            .args(["constants", "--config", "c.json"])
            .args(extra)
            .current_dir(tmp.path())
            .env(OUT_ENV, "env-out")
            .output()
            .unwrap()
    };
    assert!(run(&[]).status.success());
    assert!(tmp.path().join("env-out/constants.json").exists());
    assert!(run(&["--out", "flag-out"]).status.success());
    assert!(tmp.path().join("flag-out/constants.json").exists());
}

#[test]
fn constants_file_holds_values_and_metadata() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", r#"{"lattice": {"n_max": 8, "rho": 0.5}}"#);
    let out = bolax(&["constants", "--config", "c.json", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_PASS as i32));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/constants.json")).unwrap()).unwrap();
    let c1 = v["c1"].as_f64().unwrap();
    let c2 = v["c2"].as_f64().unwrap();
    let pi = std::f64::consts::PI;
    let coth = 1.0 / pi.tanh();
    assert!((c2 * c2 - (pi * coth - 1.0)).abs() < 1e-12);
    assert!((4.0 * c1 * c1 - (pi * pi / 6.0 - (pi * coth - 1.0) / 2.0)).abs() < 1e-12);
    assert!((v["x_max"].as_f64().unwrap() - 0.4385).abs() < 1e-4);
    assert!((v["A_max"].as_f64().unwrap() - 0.1432).abs() < 1e-4);
    assert!(v["series_check"]["c1_err"].as_f64().unwrap() < 1e-10);
    let meta = &v["metadata"];
    assert_eq!(meta["tool"], "bolax");
    assert_eq!(meta["command"], "constants");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["lattice"]["n_max"], 8);
    assert!(meta.get("timestamp").is_none());
}

#[test]
fn verify_passes_on_a_reduced_suite() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "v.json",
        r#"{"lattice": {"n_max": 16, "rho": 0.5}, "t_end": 0.5, "kappas": [100, 200, 400],
            "samples": 3, "intertwine_steps": 128}"#,
    );
    let out = bolax(&["verify", "--config", "v.json", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/verify.json")).unwrap()).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.len() >= 12);
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert_eq!(v["passed"], true);
}

#[test]
fn trap_rejects_a_large_state_citing_the_condition() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "t.json",
        r#"{"lattice": {"n_max": 16, "rho": 0.5}, "initial": {"type": "trap", "fraction": 1.5}}"#,
    );
    let out = bolax(&["trap", "--config", "t.json", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CHECK_FAILED as i32));
    let err = stderr(&out);
    assert!(err.contains("x_max") && err.contains("A_max"), "{err}");
}

#[test]
fn trap_accepts_a_small_state() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "t.json",
        r#"{"lattice": {"n_max": 16, "rho": 0.5}, "initial": {"type": "trap", "fraction": 0.3}, "t_end": 0.5}"#,
    );
    let out = bolax(&["trap", "--config", "t.json", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/trap.json")).unwrap()).unwrap();
    assert_eq!(v["trapped"], true);
    assert!(v["sup_norm"].as_f64().unwrap() <= v["X_max"].as_f64().unwrap());
    assert_eq!(v["flow"]["kind"], "bo");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.json",
        r#"{"lattice": {"n_max": 12, "rho": 0.5}, "t_end": 0.1, "record_every": 20,
            "initial": {"type": "random", "amplitude": 0.2}, "kappas": [100, 200]}"#,
    );
    for cmd in ["simulate", "converge", "constants"] {
        for o in ["a", "b"] {
            let out = bolax(&[cmd, "--config", "c.json", "--out", o, "--seed", "11"], tmp.path());
            assert!(out.status.success(), "{cmd}: {}", stderr(&out));
        }
    }
    for f in ["simulate.csv", "final_state.json", "converge.csv", "constants.json"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn simulate_snapshot_can_seed_a_new_run() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.json", r#"{"lattice": {"n_max": 8, "rho": 0.5}, "t_end": 0.05, "record_every": 10}"#);
    assert!(bolax(&["simulate", "--config", "c.json", "--out", "a"], tmp.path()).status.success());
    write(
        tmp.path(),
        "d.json",
        r#"{"lattice": {"n_max": 8, "rho": 0.5}, "t_end": 0.05, "record_every": 10,
            "initial": {"type": "snapshot", "path": "a/final_state.json"}}"#,
    );
    let out = bolax(&["simulate", "--config", "d.json", "--out", "b"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(tmp.path().join("b/simulate.csv")).unwrap();
    let first = csv.lines().find(|l| l.starts_with(|c: char| c.is_ascii_digit())).unwrap();
    assert!(first.starts_with("0.0"));
}

#[test]
fn bad_arguments_exit_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let out = bolax(&["simulate"], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG as i32));
    let out = bolax(&["simulate", "--config", "missing.json"], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_CONFIG as i32));
    assert!(bolax(&["--help"], tmp.path()).status.success());
}

#[test]
fn blow_up_exits_with_numerical_code() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.json",
        r#"{"lattice": {"n_max": 8, "rho": 0.5}, "t_end": 0.1, "dt": 0.01,
            "initial": {"type": "modes", "modes": [{"n": 1, "re": 3.0}]}}"#,
    );
    let out = bolax(&["simulate", "--config", "c.json", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(bolax_cli::EXIT_NUMERICAL as i32), "{}", stderr(&out));
    assert!(stderr(&out).contains("norm explosion"));
}
