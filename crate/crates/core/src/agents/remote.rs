//! OpenAI-compatible chat-completions client.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::{debug, warn};

use super::{Agent, AgentRequest, AgentResponse, AgentSpec};
use crate::error::AgentError;
use crate::types::{TokenLogprob, TopLogprob};

pub const DEFAULT_TOP_LOGPROBS: usize = 20;

fn default_top_logprobs() -> usize {
    DEFAULT_TOP_LOGPROBS
}
fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_top_logprobs")]
    pub top_logprobs: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub temperature: f64,
    /// First backoff delay; doubles on every retry.
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: None,
            top_logprobs: DEFAULT_TOP_LOGPROBS,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            temperature: 0.0,
            backoff_base_ms: default_backoff_ms(),
        }
    }

    pub(crate) fn validate(&self, agent: &str) -> Result<(), AgentError> {
        if self.base_url.trim().is_empty() || self.model.trim().is_empty() {
            return Err(AgentError::InvalidConfig(format!(
                "remote agent `{agent}` needs base_url and model"
            )));
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(AgentError::InvalidConfig(format!("remote agent `{agent}`: timeout must be positive")));
        }
        Ok(())
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Deserialize)]
struct WireTop {
    token: String,
    logprob: f64,
}

#[derive(Deserialize)]
struct WireToken {
    token: String,
    logprob: f64,
    #[serde(default)]
    top_logprobs: Vec<WireTop>,
}

#[derive(Deserialize)]
struct WireLogprobs {
    #[serde(default)]
    content: Option<Vec<WireToken>>,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
    #[serde(default)]
    logprobs: Option<WireLogprobs>,
}

#[derive(Deserialize)]
struct WireCompletion {
    choices: Vec<WireChoice>,
}

enum Failure {
    Retryable(String),
    Fatal(AgentError),
}

pub struct RemoteAgent {
    spec: AgentSpec,
    cfg: RemoteConfig,
    http: ureq::Agent,
    api_key: Option<String>,
    log: Mutex<Vec<Value>>,
}

impl RemoteAgent {
    pub fn new(spec: AgentSpec, cfg: RemoteConfig) -> Result<Self, AgentError> {
        cfg.validate(&spec.agent_id)?;
        let api_key = match &cfg.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                AgentError::InvalidConfig(format!(
                    "agent `{}`: environment variable {var} is not set",
                    spec.agent_id
                ))
            })?),
            None => None,
        };
        let http: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            spec,
            cfg,
            http,
            api_key,
            log: Mutex::new(Vec::new()),
        })
    }

    /// Request bodies sent so far, in order.
    pub fn request_log(&self) -> Vec<Value> {
        self.log.lock().expect("request log poisoned").clone()
    }

    pub fn request_body(&self, request: &AgentRequest<'_>) -> Value {
        let mut body = json!({
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": request.prompt.system},
                {"role": "user", "content": request.prompt.user},
            ],
            "temperature": self.cfg.temperature,
        });
        if request.need_logprobs {
            body["logprobs"] = json!(true);
            body["top_logprobs"] = json!(self.cfg.top_logprobs);
        }
        body
    }

    fn send_once(&self, body: &Value, need_logprobs: bool) -> Result<(String, Option<Vec<TokenLogprob>>), Failure> {
        let mut req = self.http.post(self.cfg.endpoint());
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| Failure::Retryable(format!("transport: {e}")))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Failure::Retryable(format!("HTTP {status}")));
        }
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Retryable(format!("reading body: {e}")))?;
        if status >= 400 {
            return Err(Failure::Fatal(self.unavailable(1, format!("HTTP {status}: {text}"))));
        }
        let parsed: WireCompletion = serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(self.unavailable(1, format!("malformed completion: {e}"))))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| Failure::Fatal(self.unavailable(1, "completion has no choices".into())))?;
        let content = choice.message.content.unwrap_or_default();
        if content.trim().is_empty() {
            return Err(Failure::Retryable("empty completion".into()));
        }
        let tokens = choice.logprobs.and_then(|l| l.content).map(|toks| {
            toks.into_iter()
                .map(|t| {
                    TokenLogprob::new(t.token, t.logprob).with_alternatives(
                        t.top_logprobs
                            .into_iter()
                            .map(|a| TopLogprob { token: a.token, logprob: a.logprob })
                            .collect(),
                    )
                })
                .collect::<Vec<_>>()
        });
        if need_logprobs && tokens.as_ref().is_none_or(|t| t.is_empty()) {
            return Err(Failure::Fatal(AgentError::LogprobsUnsupported(self.spec.agent_id.clone())));
        }
        Ok((content, tokens))
    }

    fn unavailable(&self, attempts: u32, message: String) -> AgentError {
        AgentError::BackendUnavailable {
            agent: self.spec.agent_id.clone(),
            attempts,
            message,
        }
    }
}

impl Agent for RemoteAgent {
    fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    fn respond(&self, request: &AgentRequest<'_>) -> Result<AgentResponse, AgentError> {
        let body = self.request_body(request);
        let start = Instant::now();
        let mut tries = 0;
        loop {
            self.log.lock().expect("request log poisoned").push(body.clone());
            tries += 1;
            match self.send_once(&body, request.need_logprobs) {
                Ok((text, token_logprobs)) => {
                    debug!(agent = %self.spec.agent_id, tries, "completion received");
                    return Ok(AgentResponse {
                        text,
                        token_logprobs,
                        latency_ms: start.elapsed().as_millis() as u64,
                        attempt: request.attempt,
                    });
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(msg)) => {
                    if tries > self.cfg.max_retries {
                        return Err(self.unavailable(tries, msg));
                    }
                    let delay = self.cfg.backoff_base_ms.saturating_mul(1 << (tries - 1).min(20));
                    warn!(agent = %self.spec.agent_id, tries, delay_ms = delay, "retrying: {msg}");
                    std::thread::sleep(Duration::from_millis(delay));
                }
            }
        }
    }
}
