//! A three-agent debate driven by canned replies, useful for replaying
//! recorded model outputs. Shows how confidence travels through the history
//! and how the final answer is picked.

use std::sync::Arc;

use confdebate::agents::{Agent, AgentSpec, BackendConfig, ScriptEntry, ScriptedAgent, ScriptedConfig};
use confdebate::engine::{DebateConfig, DebateEngine};
use confdebate::harness::transcript_to_json;
use confdebate::QuestionRecord;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = QuestionRecord::new("q1", "How many legs does a spider have?", "8");
    let replies = [
        ("ana", ["Reason: Arachnids have eight legs.\nAnswer: 8\nConfidence score: 95", "Reason: Still eight.\nAnswer: 8\nConfidence score: 97"]),
        ("ben", ["Reason: Like insects.\nAnswer: 6\nConfidence score: 55", "Reason: Ana is right, spiders are not insects.\nAnswer: 8\nConfidence score: 85"]),
        ("cai", ["Reason: I count eight.\nAnswer: 8\nConfidence score: 70", "Reason: Agreed.\nAnswer: 8\nConfidence score: 80"]),
    ];
    let agents: Vec<Arc<ScriptedAgent>> = replies
        .iter()
        .map(|(id, texts)| {
            let spec = AgentSpec::new(*id, format!("Agent {}", id.to_uppercase()), BackendConfig::Scripted(ScriptedConfig { script: "inline".into() }));
            let entries = texts.iter().enumerate().map(|(round, text)| ScriptEntry {
                question_id: q.id.clone(),
                round,
                agent_id: (*id).into(),
                text: (*text).into(),
                token_logprobs: None,
                attempt: None,
            });
            Arc::new(ScriptedAgent::new(spec, entries))
        })
        .collect();

    let mut cfg = DebateConfig::new(agents.iter().map(|a| a.spec().clone()).collect());
    cfg.rounds = 1;
    let engine = DebateEngine::new(cfg, agents.iter().map(|a| Arc::clone(a) as Arc<dyn Agent>).collect())?;
    let transcript = engine.run_debate(&q);

    println!("user prompt seen by {} in round 1:\n{}\n", agents[1].agent_id(), agents[1].request_log()[1].user);
    print!("{}", transcript_to_json(&transcript)?);
    Ok(())
}
