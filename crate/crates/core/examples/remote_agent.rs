//! Debating against an OpenAI-compatible chat-completions endpoint with
//! token log-probabilities (LN confidence).
//!
//!     export OPENAI_API_KEY=...
//!     cargo run --example remote_agent -- https://api.openai.com/v1 gpt-4o-mini

use confdebate::agents::{AgentSpec, BackendConfig, RemoteConfig};
use confdebate::confidence::ConfidenceMode;
use confdebate::engine::{DebateConfig, DebateEngine};
use confdebate::harness::transcript_to_json;
use confdebate::QuestionRecord;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (Some(base_url), Some(model)) = (args.next(), args.next()) else {
        eprintln!("usage: remote_agent <base_url> <model>   (API key read from OPENAI_API_KEY)");
        return Ok(());
    };
    let agents: Vec<AgentSpec> = ["Agent 1", "Agent 2"]
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut rc = RemoteConfig::new(base_url.clone(), model.clone());
            rc.api_key_env = Some("OPENAI_API_KEY".into());
            AgentSpec::new(format!("agent{}", i + 1), *name, BackendConfig::Remote(rc))
        })
        .collect();
    let mut cfg = DebateConfig::new(agents);
    cfg.confidence_mode = ConfidenceMode::LN;
    cfg.rounds = 1;
    let engine = DebateEngine::from_config(cfg)?;
    let q = QuestionRecord::new("demo", "A bat and a ball cost $1.10 in total. The bat costs $1.00 more than the ball. How much does the ball cost in cents?", "5");
    print!("{}", transcript_to_json(&engine.run_debate(&q))?);
    Ok(())
}
