//! Replays stored completions keyed by question and round.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Agent, AgentRequest, AgentResponse, AgentSpec};
use crate::error::AgentError;
use crate::types::TokenLogprob;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedConfig {
    /// JSONL table of [`ScriptEntry`] rows.
    pub script: PathBuf,
}

/// One row of a script table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub question_id: String,
    pub round: usize,
    pub agent_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<TokenLogprob>>,
    /// Reply for a specific format retry; rows without it answer every attempt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
}

/// What the agent was asked, recorded per call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestLogEntry {
    pub question_id: String,
    pub round: usize,
    pub attempt: u32,
    pub history_len: usize,
    pub system: String,
    pub user: String,
}

type Key = (String, usize, Option<u32>);

pub struct ScriptedAgent {
    spec: AgentSpec,
    table: HashMap<Key, ScriptEntry>,
    log: Mutex<Vec<RequestLogEntry>>,
}

impl ScriptedAgent {
    /// Keeps the rows addressed to this agent.
    pub fn new(spec: AgentSpec, entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        let table = entries
            .into_iter()
            .filter(|e| e.agent_id == spec.agent_id)
            .map(|e| ((e.question_id.clone(), e.round, e.attempt), e))
            .collect();
        Self {
            spec,
            table,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn from_file(spec: AgentSpec, path: &Path) -> Result<Self, AgentError> {
        let text = std::fs::read_to_string(path)?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScriptEntry = serde_json::from_str(line).map_err(|e| {
                AgentError::InvalidConfig(format!("{}:{}: {e}", path.display(), i + 1))
            })?;
            entries.push(entry);
        }
        Ok(Self::new(spec, entries))
    }

    pub fn request_log(&self) -> Vec<RequestLogEntry> {
        self.log.lock().expect("request log poisoned").clone()
    }
}

impl Agent for ScriptedAgent {
    fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    fn respond(&self, request: &AgentRequest<'_>) -> Result<AgentResponse, AgentError> {
        let qid = &request.question.id;
        self.log.lock().expect("request log poisoned").push(RequestLogEntry {
            question_id: qid.clone(),
            round: request.round,
            attempt: request.attempt,
            history_len: request.history.len(),
            system: request.prompt.system.clone(),
            user: request.prompt.user.clone(),
        });
        let entry = self
            .table
            .get(&(qid.clone(), request.round, Some(request.attempt)))
            .or_else(|| self.table.get(&(qid.clone(), request.round, None)))
            .ok_or_else(|| AgentError::MissingScript {
                agent: self.spec.agent_id.clone(),
                question: qid.clone(),
                round: request.round,
            })?;
        if request.need_logprobs && entry.token_logprobs.is_none() {
            return Err(AgentError::LogprobsUnsupported(self.spec.agent_id.clone()));
        }
        Ok(AgentResponse {
            text: entry.text.clone(),
            token_logprobs: entry.token_logprobs.clone(),
            latency_ms: 0,
            attempt: request.attempt,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{BackendConfig, PromptBundle};
    use crate::confidence::ConfidenceMode;
    use crate::types::QuestionRecord;

    fn entry(q: &str, round: usize, agent: &str, text: &str) -> ScriptEntry {
        ScriptEntry {
            question_id: q.into(),
            round,
            agent_id: agent.into(),
            text: text.into(),
            token_logprobs: None,
            attempt: None,
        }
    }

    #[test]
    fn lookup_is_deterministic() {
        let spec = AgentSpec::new(
            "a",
            "A",
            BackendConfig::Scripted(ScriptedConfig { script: "unused".into() }),
        );
        let agent = ScriptedAgent::new(
            spec,
            [entry("q1", 0, "a", "Reason: r\nAnswer: 4"), entry("q1", 0, "b", "other")],
        );
        let q = QuestionRecord::new("q1", "2+2?", "4");
        let prompt = PromptBundle { system: "s".into(), user: "u".into() };
        let req = AgentRequest {
            question: &q,
            prompt: &prompt,
            history: &[],
            round: 0,
            confidence_mode: ConfidenceMode::SV,
            need_logprobs: false,
            seed: 1,
            attempt: 0,
        };
        for _ in 0..3 {
            assert_eq!(agent.respond(&req).unwrap().text, "Reason: r\nAnswer: 4");
        }
        assert_eq!(agent.request_log().len(), 3);
        let missing = AgentRequest { round: 1, ..req };
        assert!(matches!(agent.respond(&missing), Err(AgentError::MissingScript { round: 1, .. })));
        let ln = AgentRequest { need_logprobs: true, ..req };
        assert!(matches!(agent.respond(&ln), Err(AgentError::LogprobsUnsupported(_))));
    }
}
