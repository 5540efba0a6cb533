//! Prints the system and user prompts an agent receives in each confidence
//! mode, for the initial round and a debate round.

use confdebate::agents::{AgentSpec, SimulatedConfig};
use confdebate::confidence::ConfidenceMode;
use confdebate::engine::build_prompt;

fn main() {
    let mut agent = AgentSpec::simulated("alpha", SimulatedConfig::new(0.7, 5.0, 2.0, 0.0));
    agent.display_name = "Agent Alpha".into();
    let question = "What is the capital of Australia?";
    let history = "[Agent Beta, Round 0]\nReason: It is the largest city.\nAnswer: Sydney\nConfidence: 80";
    for (label, mode) in [
        ("LN", ConfidenceMode::LN),
        ("SV", ConfidenceMode::SV),
        ("SV categorical", ConfidenceMode::SV.categorical()),
        ("no confidence", ConfidenceMode::NONE),
    ] {
        for round in [0, 1] {
            let p = build_prompt(&agent, mode, question, (round > 0).then_some(history), round);
            println!("===== {label}, round {round} =====\n--- system ---\n{}\n--- user ---\n{}\n", p.system, p.user);
        }
    }
}
