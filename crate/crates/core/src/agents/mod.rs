//! Agent backends: remote chat-completions models, scripted replay and the
//! stochastic simulated debater.

mod remote;
mod scripted;
mod simulated;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceMode;
use crate::error::AgentError;
use crate::types::{DebateTurn, QuestionRecord, TokenLogprob};

pub use remote::{RemoteAgent, RemoteConfig, DEFAULT_TOP_LOGPROBS};
pub use scripted::{RequestLogEntry, ScriptEntry, ScriptedAgent, ScriptedConfig};
pub use simulated::{candidate_answers, simulated_step, SimulatedAgent, SimulatedConfig};

/// System and user messages for one call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum BackendConfig {
    Remote(RemoteConfig),
    Scripted(ScriptedConfig),
    Simulated(SimulatedConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub agent_id: String,
    /// Name shown to the other debaters.
    pub display_name: String,
    #[serde(flatten)]
    pub backend: BackendConfig,
}

impl AgentSpec {
    pub fn new(agent_id: impl Into<String>, display_name: impl Into<String>, backend: BackendConfig) -> Self {
        Self {
            agent_id: agent_id.into(),
            display_name: display_name.into(),
            backend,
        }
    }

    pub fn simulated(agent_id: impl Into<String>, cfg: SimulatedConfig) -> Self {
        let id = agent_id.into();
        Self::new(id.clone(), id, BackendConfig::Simulated(cfg))
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.agent_id.trim().is_empty() {
            return Err(AgentError::InvalidConfig("agent_id must be non-empty".into()));
        }
        match &self.backend {
            BackendConfig::Remote(r) => r.validate(&self.agent_id),
            BackendConfig::Scripted(_) => Ok(()),
            BackendConfig::Simulated(s) => s.validate(&self.agent_id),
        }
    }
}

/// Everything an agent may look at when producing one turn.
#[derive(Debug, Clone, Copy)]
pub struct AgentRequest<'a> {
    pub question: &'a QuestionRecord,
    pub prompt: &'a PromptBundle,
    /// Turns rendered into the prompt, in order.
    pub history: &'a [DebateTurn],
    pub round: usize,
    pub confidence_mode: ConfidenceMode,
    pub need_logprobs: bool,
    pub seed: u64,
    /// 0 for the first try, 1 for the first format retry, ...
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentResponse {
    pub text: String,
    /// Per-token log-probabilities of the whole completion.
    pub token_logprobs: Option<Vec<TokenLogprob>>,
    pub latency_ms: u64,
    pub attempt: u32,
}

pub trait Agent: Send + Sync {
    fn spec(&self) -> &AgentSpec;

    fn respond(&self, request: &AgentRequest<'_>) -> Result<AgentResponse, AgentError>;

    fn agent_id(&self) -> &str {
        &self.spec().agent_id
    }
}

/// Instantiates the backend named in `spec`.
pub fn build_agent(spec: AgentSpec) -> Result<Arc<dyn Agent>, AgentError> {
    spec.validate()?;
    Ok(match spec.backend.clone() {
        BackendConfig::Remote(cfg) => Arc::new(RemoteAgent::new(spec, cfg)?),
        BackendConfig::Scripted(cfg) => Arc::new(ScriptedAgent::from_file(spec, &cfg.script)?),
        BackendConfig::Simulated(_) => Arc::new(SimulatedAgent::new(spec)?),
    })
}
