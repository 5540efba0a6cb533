//! Two simulated agents of unequal strength debating 1000 synthetic questions
//! under three settings: no confidence with majority vote, raw LN confidence,
//! and Platt-calibrated LN confidence. Prints the questions where exactly one
//! agent started out right and how often the debate ended on the right answer.
//!
//!     cargo run --release --example simulated_debate

use std::collections::HashSet;

use confdebate::agents::{AgentSpec, SimulatedConfig};
use confdebate::calibration::{load_calibrator, CalibrationMethod, CALIBRATOR_EXT};
use confdebate::confidence::ConfidenceMode;
use confdebate::engine::{DebateConfig, DebateEngine};
use confdebate::harness::{cmd_calibrate, synthetic_dataset, CalibrateOptions};
use confdebate::metrics::{GoldSet, MetricsReport};
use confdebate::{DebateTranscript, SelectionPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let agents = vec![
        AgentSpec::simulated("strong", SimulatedConfig::new(0.8, 5.0, 4.0, 0.0)),
        AgentSpec::simulated("weak", SimulatedConfig::new(0.6, 5.0, 4.0, 0.2)),
    ];
    let cal_dir = tempfile::tempdir()?;
    let mut copts = CalibrateOptions::new(
        agents.clone(),
        synthetic_dataset("val", 500),
        ConfidenceMode::LN,
        CalibrationMethod::Platt,
        cal_dir.path(),
    );
    copts.global_seed = 1;
    println!("{}", cmd_calibrate(&copts)?.to_table());

    let test = synthetic_dataset("test", 1000);
    let gold = GoldSet::new(test.clone());
    let right = |t: &DebateTranscript, answer: &str| {
        let q = gold.question(&t.question_id).expect("known question");
        gold.matcher().matches(answer, &q.gold_answer, q)
    };

    let settings = [
        ("no confidence, majority", ConfidenceMode::NONE, CalibrationMethod::Vanilla, SelectionPolicy::MajorityVote),
        ("LN vanilla, argmax", ConfidenceMode::LN, CalibrationMethod::Vanilla, SelectionPolicy::ArgmaxConfidence),
        ("LN platt, argmax", ConfidenceMode::LN, CalibrationMethod::Platt, SelectionPolicy::ArgmaxConfidence),
    ];
    println!("{:<26}{:>8}{:>15}{:>10}{:>20}", "setting", "split", "final correct", "system", "round-0 win rate");
    for (label, mode, method, policy) in settings {
        let mut cfg = DebateConfig::new(agents.clone());
        cfg.confidence_mode = mode;
        cfg.calibration = method;
        cfg.selection_policy = policy;
        cfg.global_seed = 2;
        if method == CalibrationMethod::Platt {
            for a in &agents {
                let path = cal_dir.path().join(format!("{}.{CALIBRATOR_EXT}", a.agent_id));
                cfg.calibrators.insert(a.agent_id.clone(), load_calibrator(&path)?);
            }
        }
        let engine = DebateEngine::from_config(cfg)?;
        let ts: Vec<_> = test.iter().map(|q| engine.run_debate(q)).collect();
        let split: HashSet<&str> = ts
            .iter()
            .filter(|t| t.round_turns(0).filter(|x| right(t, &x.answer_raw)).count() == 1)
            .map(|t| t.question_id.as_str())
            .collect();
        let fixed = ts
            .iter()
            .filter(|t| split.contains(t.question_id.as_str()) && right(t, &t.final_answer))
            .count();
        let report = MetricsReport::compute(&ts, &gold)?;
        let wr = report.win_rate_per_round.get(&0).map_or("-".into(), |w| w.to_string());
        println!(
            "{label:<26}{:>8}{:>15.3}{:>10.3}{wr:>20}",
            split.len(),
            fixed as f64 / split.len() as f64,
            report.accuracy_system
        );
    }
    Ok(())
}
