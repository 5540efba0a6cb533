//! End-to-end run on disk: calibrate, debate with several workers, then
//! write the metrics report next to the transcripts.
//!
//!     cargo run --example debate_report -- /tmp/debate-run

use std::path::PathBuf;

use confdebate::agents::{AgentSpec, SimulatedConfig};
use confdebate::calibration::{load_calibrator, CalibrationMethod, CALIBRATOR_EXT};
use confdebate::confidence::ConfidenceMode;
use confdebate::engine::DebateConfig;
use confdebate::harness::{cmd_calibrate, cmd_debate, cmd_report, render_report, synthetic_dataset, CalibrateOptions, DebateOptions, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("confdebate-report"), PathBuf::from);
    let agents = vec![
        AgentSpec::simulated("a", SimulatedConfig::new(0.75, 6.0, 3.0, 0.0)),
        AgentSpec::simulated("b", SimulatedConfig::new(0.65, 6.0, 3.0, 0.15)),
        AgentSpec::simulated("c", SimulatedConfig::new(0.55, 6.0, 3.0, -0.1)),
    ];
    let cal_dir = out.join("calibrators");
    let copts = CalibrateOptions::new(agents.clone(), synthetic_dataset("val", 300), ConfidenceMode::SV, CalibrationMethod::Histogram, &cal_dir);
    print!("{}", cmd_calibrate(&copts)?.to_table());

    let mut cfg = DebateConfig::new(agents.clone());
    cfg.calibration = CalibrationMethod::Histogram;
    for a in &agents {
        cfg.calibrators.insert(a.agent_id.clone(), load_calibrator(&cal_dir.join(format!("{}.{CALIBRATOR_EXT}", a.agent_id)))?);
    }
    let test = synthetic_dataset("test", 200);
    let mut opts = DebateOptions::new(cfg, test.clone(), out.join("run"));
    opts.workers = 4;
    let manifest = cmd_debate(&opts)?;
    println!("\n{} debates in {} ms, digest {}", manifest.completed, manifest.elapsed_ms, manifest.config_digest);

    let report = cmd_report(&out.join("run"), &test)?;
    print!("\n{}", render_report(&report, ReportFormat::Text));
    println!("\nfiles written under {}", out.display());
    Ok(())
}
