use std::path::Path;
use std::process::{Command, Output};

fn boostbench(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boostbench"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_writes_full_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = boostbench(dir.path(), &["simulate", "--controller", "constant", "--duty", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5002);
    assert!(stdout(&o).contains("settling_time"));
}

#[test]
fn simulate_pi_with_flag_gains() {
    let dir = tempfile::tempdir().unwrap();
    let o = boostbench(
        dir.path(),
        &["simulate", "--kp", "0.0021", "--ki", "0.314", "--vref", "60", "--profile", "variable"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_with_unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.json");
    std::fs::write(&cfg, r#"{"v_ref": 54, "gain": 3}"#).unwrap();
    let o = boostbench(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gain"));

    std::fs::write(&cfg, r#"{"v_ref": 54, "params_set": "paper", "profile": "step"}"#).unwrap();
    let o = boostbench(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = boostbench(dir.path(), &["simulate", "--controller", "ann"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn full_pipeline_on_small_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let run = |args: &[&str]| {
        let o = boostbench(out, args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&["--seed", "3", "tune-pi", "--method", "pso", "--particles", "4", "--iterations", "2"]);
    run(&["tune-pi", "--method", "ga", "--particles", "4", "--iterations", "2"]);
    run(&["train-ann", "--n", "2000", "--epochs", "3", "--dataset"]);
    let ppo_cfg = out.join("ppo.json");
    std::fs::write(
        &ppo_cfg,
        serde_json::to_string(&boost_core::ppo::PpoConfig {
            neurons: 8,
            ..Default::default()
        })
        .unwrap(),
    )
    .unwrap();
    run(&["train-ppo", "--episodes", "1", "--ppo-config", ppo_cfg.to_str().unwrap()]);

    for f in ["pi_pso.json", "pi_ga.json", "ann.json", "ann_dataset.csv", "ppo_48/agent.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let tuned: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("pi_pso.json")).unwrap()).unwrap();
    assert_eq!(tuned["method"], "pso");
    assert_eq!(tuned["history"].as_array().unwrap().len(), 3);

    run(&["evaluate"]);
    let report = boost_core::harness::Report::load(out.join("report.json")).unwrap();
    assert_eq!(report.rows.len(), 24);
    let failed: Vec<_> = report.rows.iter().filter(|r| !r.is_ok()).collect();
    // Only the 54 V and 60 V agents are missing.
    assert_eq!(failed.len(), 4);
    assert!(failed.iter().all(|r| r.controller == "rl" && r.v_ref != 48.0));
    for f in ["metrics.csv", "reference_comparison.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(out.join("trajectories").read_dir().unwrap().count() >= 20);

    let o = run(&["report"]);
    assert!(stdout(&o).contains("pi-pso"));

    let o = boostbench(out, &["verify"]);
    assert_eq!(o.status.code(), Some(1), "under-trained artifacts must not verify");
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion")).count(), 11);
}
