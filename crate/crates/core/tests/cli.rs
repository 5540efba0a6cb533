use std::path::Path;
use std::process::Command;

use confdebate::harness::{synthetic_dataset, write_dataset};

const AGENTS: &str = r#"
[[agents]]
agent_id = "strong"
display_name = "Agent Strong"
backend = "simulated"
base_accuracy = 0.8
confidence_sharpness = 5.0
persuadability = 4.0

[[agents]]
agent_id = "weak"
display_name = "Agent Weak"
backend = "simulated"
base_accuracy = 0.6
confidence_sharpness = 5.0
persuadability = 4.0
miscalibration_bias = 0.2
"#;

fn run(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_confdebate"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

#[test]
fn calibrate_debate_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("agents.toml"), AGENTS).unwrap();
    write_dataset(&d.join("val.jsonl"), &synthetic_dataset("v", 100)).unwrap();
    write_dataset(&d.join("test.jsonl"), &synthetic_dataset("t", 30)).unwrap();

    let out = run(
        &["calibrate", "--agents", "agents.toml", "--validation", "val.jsonl", "--mode", "ln", "--method", "platt", "--out", "cal"],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ECE platt"));
    assert!(d.join("cal/strong.cal.json").exists());

    let run_cfg = format!(
        "rounds = 2\nconfidence_mode = {{ method = \"ln\" }}\ncalibration = \"platt\"\ncalibrator_dir = \"cal\"\nglobal_seed = 7\n{AGENTS}"
    );
    std::fs::write(d.join("run.toml"), run_cfg).unwrap();
    let out = run(&["debate", "--config", "run.toml", "--dataset", "test.jsonl", "--out", "runs", "--workers", "4"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("30 completed"));

    let out = run(&["report", "--in", "runs", "--dataset", "test.jsonl", "--format", "json"], d);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n_questions"], 30);
    assert!(d.join("runs/report.txt").exists());
}

#[test]
fn missing_calibrators_exit_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_dataset(&d.join("test.jsonl"), &synthetic_dataset("t", 2)).unwrap();
    let cfg = format!("calibration = \"histogram\"\ncalibrator_dir = \"nowhere\"\n{AGENTS}");
    std::fs::write(d.join("run.toml"), cfg).unwrap();
    let out = run(&["debate", "--config", "run.toml", "--dataset", "test.jsonl", "--out", "runs"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibrator"));
    assert!(!d.join("runs").exists());
}
