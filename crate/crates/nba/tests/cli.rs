//! End-to-end checks of the `nba` binary: exit codes, output files, JSON
//! shapes. Exit taxonomy: 0 ok, 2 config, 3 runtime, 4 internal, 5
//! verification violation.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nba"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nba_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn run_happy_path_writes_outputs() {
    let dir = temp_dir("run");
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        r#"{
            "id": "smoke",
            "process": {"process": "g_bounded", "g": 2},
            "n": 200, "m": 20000, "repetitions": 4, "master_seed": 11
        }"#,
    )
    .unwrap();
    let out = dir.join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert!(runs.starts_with(
        "config_id,process,g_or_param,n,m,repetition,seed,final_gap,final_gap_rounded,runtime_ms"
    ));
    assert_eq!(runs.lines().count(), 5); // header + 4 repetitions
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(parsed[0]["config_id"], "smoke");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn malformed_json_is_config_error_with_position() {
    let dir = temp_dir("badjson");
    let config = dir.join("config.json");
    std::fs::write(&config, "{ not json").unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("line") && stderr.contains("column"),
        "stderr should carry the parse position: {stderr}"
    );
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn invalid_invariant_is_config_error() {
    let dir = temp_dir("badn");
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        r#"{"process": {"process": "one_choice"}, "n": 0, "m": 10, "repetitions": 1, "master_seed": 1}"#,
    )
    .unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("n must be at least 1"), "{stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn missing_config_and_preset_is_config_error() {
    let output = bin().arg("run").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn verify_default_suites_pass_small() {
    let output = bin()
        .args([
            "verify",
            "--suite",
            "quadratic_adv_comp,gamma_bound",
            "--trials",
            "300",
            "--seed",
            "7",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{:?}", output);
    let stdout = String::from_utf8_lossy(&output.stdout);
    let parsed: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(parsed[0]["suite"], "quadratic_adv_comp");
    assert_eq!(parsed[0]["violations"], 0);
}

#[test]
fn verify_negative_controls_exit_five() {
    let output = bin()
        .args([
            "verify",
            "--suite",
            "lambda_any_step",
            "--trials",
            "50",
            "--negative-controls",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(5));
}

#[test]
fn verify_zero_trials_is_config_error() {
    let output = bin().args(["verify", "--trials", "0"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn verify_unknown_suite_is_config_error() {
    let output = bin()
        .args(["verify", "--suite", "nonsense", "--trials", "10"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("superexp_drop"), "{stderr}");
}

#[test]
fn constants_happy_path_and_bad_g() {
    let output = bin()
        .args(["constants", "--g", "4", "--n", "100000"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    let names: Vec<&str> = parsed["constants"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    for expected in ["gamma", "kappa", "alpha1", "Delta_r", "Delta_s", "c5"] {
        assert!(names.contains(&expected), "{expected} missing");
    }
    // layer plan at g=4 is out of range for representable n; note attached
    assert!(parsed["layer_plan"].is_null());
    assert!(parsed["layer_plan_note"].is_string());

    let output = bin()
        .args(["constants", "--g", "1", "--n", "100000"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    assert!(parsed["layer_plan_note"]
        .as_str()
        .unwrap()
        .contains("requires g > 1"));

    let output = bin()
        .args(["constants", "--g", "0", "--n", "100"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn preset_dump_round_trips() {
    let output = bin().args(["preset", "table3"]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8_lossy(&output.stdout);
    let configs: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(configs.len(), 54);
    // reload through the run entry point: dump -> file -> validate
    let dir = temp_dir("preset");
    let file = dir.join("dump.json");
    std::fs::write(&file, text.as_bytes()).unwrap();
    // n is large; just validating is the point, so corrupt nothing and use
    // the sweep validation path indirectly via a parse check
    let parsed: Vec<nba::harness::ExperimentConfig> =
        serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    for cfg in &parsed {
        cfg.validate().unwrap();
    }
    let _ = std::fs::remove_dir_all(&dir);

    let output = bin().args(["preset", "tableX"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("scaled_desk"));
}

#[test]
fn sweep_runs_from_file() {
    let dir = temp_dir("sweep");
    let config = dir.join("sweep.json");
    std::fs::write(
        &config,
        r#"{
            "base": {"process": {"process": "two_choice"}, "n": 100, "m": 5000,
                     "repetitions": 3, "master_seed": 5},
            "grid": [
                {"label": "g1", "process": {"process": "g_bounded", "g": 1}},
                {"label": "g4", "process": {"process": "g_bounded", "g": 4}}
            ]
        }"#,
    )
    .unwrap();
    let out = dir.join("out");
    let status = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("label,mean_gap,std_dev,error"));
    assert_eq!(csv.lines().count(), 3);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn workers_env_fallback_is_honored() {
    let dir = temp_dir("env");
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        r#"{"process": {"process": "two_choice"}, "n": 100, "m": 2000, "repetitions": 2, "master_seed": 3}"#,
    )
    .unwrap();
    let out1 = dir.join("a");
    let out2 = dir.join("b");
    for (out, workers) in [(&out1, "1"), (&out2, "4")] {
        let status = bin()
            .env("NBA_WORKERS", workers)
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = std::fs::read(out1.join("runs.csv")).unwrap();
    let b = std::fs::read(out2.join("runs.csv")).unwrap();
    assert_eq!(a, b, "worker count must not influence outputs");
    let _ = std::fs::remove_dir_all(&dir);
}
