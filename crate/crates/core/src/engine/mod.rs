//! Debate execution: an independent initial round, `T` debate rounds with
//! history threading, then final-answer selection.

mod prompt;
mod seed;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::agents::{build_agent, Agent, AgentRequest, AgentResponse, AgentSpec};
use crate::answer::{AnswerMatcher, StandardMatcher};
use crate::calibration::{CalibrationMethod, Calibrator};
use crate::confidence::{
    coarsen_categorical, extract_answer_tokens, last_line_span, ln_confidence, sv_confidence, ConfidenceMethod,
    ConfidenceMode, Granularity,
};
use crate::error::{AgentError, EngineError, ParseError};
use crate::parse::parse_turn;
use crate::types::{
    ConfidenceScore, DebateTranscript, DebateTurn, ParsedTurn, QuestionRecord, SelectionPolicy, TranscriptStatus,
    TurnFlag,
};

pub use prompt::{
    build_prompt, display_confidence, format_reminder, render_history, DEBATE_USER, INIT_USER, LN_DEBATE_SYSTEM,
    LN_INIT_SYSTEM, NOCONF_DEBATE_SYSTEM, NOCONF_INIT_SYSTEM, SV_DEBATE_SYSTEM, SV_INIT_SYSTEM,
};
pub use seed::{call_seed, derive_seed, question_seed, selection_seed, sha256_hex};

pub const DEFAULT_ROUNDS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DebateMode {
    /// Agents speak in turn and see every turn produced so far.
    #[default]
    OneByOne,
    /// Agents answer in parallel to the previous round's history.
    Broadcast,
}

fn default_rounds() -> usize {
    DEFAULT_ROUNDS
}
fn default_retries() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateConfig {
    /// Speaking order.
    pub agents: Vec<AgentSpec>,
    /// Debate rounds after the initial round.
    #[serde(default = "default_rounds", alias = "rounds_T")]
    pub rounds: usize,
    #[serde(default)]
    pub mode: DebateMode,
    #[serde(default)]
    pub confidence_mode: ConfidenceMode,
    /// Calibration method the run expects; `vanilla` uses raw scores.
    #[serde(default = "vanilla")]
    pub calibration: CalibrationMethod,
    #[serde(default)]
    pub calibrators: BTreeMap<String, Calibrator>,
    #[serde(default)]
    pub selection_policy: SelectionPolicy,
    #[serde(default)]
    pub global_seed: u64,
    #[serde(default = "default_retries")]
    pub sv_parse_retries: u32,
}

fn vanilla() -> CalibrationMethod {
    CalibrationMethod::Vanilla
}

impl DebateConfig {
    pub fn new(agents: Vec<AgentSpec>) -> Self {
        Self {
            agents,
            rounds: DEFAULT_ROUNDS,
            mode: DebateMode::OneByOne,
            confidence_mode: ConfidenceMode::SV,
            calibration: CalibrationMethod::Vanilla,
            calibrators: BTreeMap::new(),
            selection_policy: SelectionPolicy::ArgmaxConfidence,
            global_seed: 0,
            sv_parse_retries: 1,
        }
    }

    /// Whether turns pass through a fitted calibrator.
    pub fn calibrates(&self) -> bool {
        self.confidence_mode.is_enabled() && self.calibration != CalibrationMethod::Vanilla
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.agents.is_empty() {
            return Err(EngineError::Config("at least one agent is required".into()));
        }
        let mut seen = HashSet::new();
        for a in &self.agents {
            a.validate()?;
            if !seen.insert(a.agent_id.as_str()) {
                return Err(EngineError::Config(format!("duplicate agent_id `{}`", a.agent_id)));
            }
        }
        if let Some(extra) = self.calibrators.keys().find(|k| !seen.contains(k.as_str())) {
            return Err(EngineError::Config(format!("calibrator for unknown agent `{extra}`")));
        }
        if self.calibrates() {
            for a in &self.agents {
                let c = self.calibrators.get(&a.agent_id).ok_or_else(|| {
                    EngineError::Config(format!(
                        "no {} calibrator for agent `{}`",
                        self.calibration, a.agent_id
                    ))
                })?;
                if c.method() != self.calibration {
                    return Err(EngineError::Config(format!(
                        "calibrator for `{}` is {}, run expects {}",
                        a.agent_id,
                        c.method(),
                        self.calibration
                    )));
                }
                c.check_compatible(self.confidence_mode)?;
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form; changes iff any field changes.
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

/// Picks the final answer from the last round's turns.
///
/// Argmax ties (exactly equal calibrated scores) and majority ties are broken
/// uniformly at random with `rng`; majority vote reports no agent.
pub fn select_final_answer<R: Rng + ?Sized>(
    final_turns: &[DebateTurn],
    policy: SelectionPolicy,
    rng: &mut R,
) -> (String, Option<String>) {
    if final_turns.is_empty() {
        return (String::new(), None);
    }
    match policy {
        SelectionPolicy::ArgmaxConfidence => {
            let best = final_turns
                .iter()
                .map(|t| t.conf_cal.value())
                .fold(f64::NEG_INFINITY, f64::max);
            let tied: Vec<&DebateTurn> = final_turns.iter().filter(|t| t.conf_cal.value() == best).collect();
            let pick = if tied.len() == 1 { tied[0] } else { tied[rng.random_range(0..tied.len())] };
            (pick.answer_raw.clone(), Some(pick.agent_id.clone()))
        }
        SelectionPolicy::MajorityVote => {
            // classes in first-appearance order
            let mut classes: Vec<(&str, &DebateTurn, usize)> = Vec::new();
            for t in final_turns {
                match classes.iter_mut().find(|(norm, _, _)| *norm == t.answer_norm) {
                    Some(c) => c.2 += 1,
                    None => classes.push((&t.answer_norm, t, 1)),
                }
            }
            let top = classes.iter().map(|c| c.2).max().unwrap_or(0);
            let modal: Vec<_> = classes.iter().filter(|c| c.2 == top).collect();
            let pick = if modal.len() == 1 { modal[0] } else { modal[rng.random_range(0..modal.len())] };
            (pick.1.answer_raw.clone(), None)
        }
    }
}

/// Runs debates for one configuration. Agents are shared across threads.
pub struct DebateEngine {
    cfg: DebateConfig,
    agents: Vec<Arc<dyn Agent>>,
    matcher: Arc<dyn AnswerMatcher>,
    digest: String,
}

impl DebateEngine {
    /// `agents` must follow `cfg.agents` in order.
    pub fn new(cfg: DebateConfig, agents: Vec<Arc<dyn Agent>>) -> Result<Self, EngineError> {
        cfg.validate()?;
        if agents.len() != cfg.agents.len()
            || agents.iter().zip(&cfg.agents).any(|(a, s)| a.agent_id() != s.agent_id)
        {
            return Err(EngineError::Config("agent instances do not match the configured speaking order".into()));
        }
        let digest = cfg.digest();
        Ok(Self {
            cfg,
            agents,
            matcher: Arc::new(StandardMatcher),
            digest,
        })
    }

    /// Builds every backend from its spec.
    pub fn from_config(cfg: DebateConfig) -> Result<Self, EngineError> {
        let agents = cfg
            .agents
            .iter()
            .cloned()
            .map(build_agent)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(cfg, agents)
    }

    pub fn with_matcher(mut self, matcher: Arc<dyn AnswerMatcher>) -> Self {
        self.matcher = matcher;
        self
    }

    pub fn config(&self) -> &DebateConfig {
        &self.cfg
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn agents(&self) -> &[Arc<dyn Agent>] {
        &self.agents
    }

    fn question_seed(&self, q: &QuestionRecord) -> u64 {
        question_seed(self.cfg.global_seed, &q.id)
    }

    /// Every agent answers independently with no history.
    pub fn run_initial_round(&self, q: &QuestionRecord) -> Result<Vec<DebateTurn>, EngineError> {
        let qs = self.question_seed(q);
        (0..self.agents.len()).map(|i| self.produce_turn(i, q, &[], 0, qs)).collect()
    }

    /// One debate round (`round >= 1`) on top of `history`.
    pub fn run_debate_round(&self, q: &QuestionRecord, history: &[DebateTurn], round: usize) -> Result<Vec<DebateTurn>, EngineError> {
        assert!(round >= 1, "debate rounds start at 1");
        let qs = self.question_seed(q);
        match self.cfg.mode {
            DebateMode::OneByOne => {
                let mut seen = history.to_vec();
                let mut new_turns = Vec::with_capacity(self.agents.len());
                for i in 0..self.agents.len() {
                    let turn = self.produce_turn(i, q, &seen, round, qs)?;
                    seen.push(turn.clone());
                    new_turns.push(turn);
                }
                Ok(new_turns)
            }
            DebateMode::Broadcast => std::thread::scope(|s| {
                let handles: Vec<_> = (0..self.agents.len())
                    .map(|i| s.spawn(move || self.produce_turn(i, q, history, round, qs)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("agent thread panicked"))
                    .collect()
            }),
        }
    }

    /// Full debate; an agent failure yields a partial transcript marked failed.
    pub fn run_debate(&self, q: &QuestionRecord) -> DebateTranscript {
        let qs = self.question_seed(q);
        let mut transcript = DebateTranscript {
            question_id: q.id.clone(),
            config_digest: self.digest.clone(),
            n_agents: self.agents.len(),
            n_rounds: self.cfg.rounds,
            turns: Vec::with_capacity(self.agents.len() * (self.cfg.rounds + 1)),
            final_answer: String::new(),
            final_answer_agent: None,
            selection_policy: self.cfg.selection_policy,
            rng_seed: qs,
            status: TranscriptStatus::Completed,
            failure: None,
        };
        for round in 0..=self.cfg.rounds {
            let result = if round == 0 {
                self.run_initial_round(q)
            } else {
                self.run_debate_round(q, &transcript.turns, round)
            };
            match result {
                Ok(turns) => transcript.turns.extend(turns),
                Err(e) => {
                    warn!(question = %q.id, round, "debate aborted: {e}");
                    transcript.status = TranscriptStatus::Failed;
                    transcript.failure = Some(e.to_string());
                    return transcript;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(selection_seed(qs));
        let finals: Vec<DebateTurn> = transcript.round_turns(self.cfg.rounds).cloned().collect();
        let (answer, agent) = select_final_answer(&finals, self.cfg.selection_policy, &mut rng);
        transcript.final_answer = answer;
        transcript.final_answer_agent = agent;
        transcript
    }

    #[allow(clippy::too_many_arguments)]
    fn call(&self, i: usize, q: &QuestionRecord, prompt: &crate::agents::PromptBundle, history: &[DebateTurn], round: usize, qs: u64, attempt: u32) -> Result<AgentResponse, AgentError> {
        let mode = self.cfg.confidence_mode;
        self.agents[i].respond(&AgentRequest {
            question: q,
            prompt,
            history,
            round,
            confidence_mode: mode,
            need_logprobs: mode.needs_logprobs(),
            seed: call_seed(qs, round, i, attempt),
            attempt,
        })
    }

    fn produce_turn(&self, i: usize, q: &QuestionRecord, history: &[DebateTurn], round: usize, qs: u64) -> Result<DebateTurn, EngineError> {
        let mode = self.cfg.confidence_mode;
        let spec = &self.cfg.agents[i];
        let history_text = (round > 0).then(|| render_history(history, &self.cfg.agents, mode));
        let base = build_prompt(spec, mode, &q.question, history_text.as_deref(), round);
        let expect_sv = mode.method == ConfidenceMethod::Sv;

        let mut prompt = base.clone();
        let mut attempt = 0;
        let (response, parsed) = loop {
            let response = self.call(i, q, &prompt, history, round, qs, attempt)?;
            let parsed = parse_turn(&response.text, expect_sv);
            if parsed.is_ok() || attempt >= self.cfg.sv_parse_retries {
                break (response, parsed);
            }
            debug!(agent = %spec.agent_id, round, attempt, "unparsable reply, retrying with format reminder");
            attempt += 1;
            prompt = base.clone();
            prompt.user.push_str(&format_reminder(mode, round));
        };

        let mut flags = Vec::new();
        if attempt > 0 {
            flags.push(TurnFlag::Retried);
        }
        let parsed = match parsed {
            Ok(p) => p,
            Err(e) => fallback_parse(&response.text, expect_sv, e, &mut flags),
        };
        flags.extend(parsed.flags.iter().copied());

        let (mut raw, token_logprobs) = match mode.method {
            ConfidenceMethod::None => {
                flags.push(TurnFlag::NoConfidence);
                (ConfidenceScore::NEUTRAL, None)
            }
            ConfidenceMethod::Sv => match sv_confidence(&parsed) {
                Ok(c) => (c, None),
                Err(_) => {
                    if !flags.contains(&TurnFlag::ConfidenceDefaulted) {
                        flags.push(TurnFlag::ConfidenceDefaulted);
                    }
                    (ConfidenceScore::NEUTRAL, None)
                }
            },
            ConfidenceMethod::Ln => {
                let tokens = response
                    .token_logprobs
                    .as_deref()
                    .ok_or_else(|| AgentError::LogprobsUnsupported(spec.agent_id.clone()))?;
                let span = match extract_answer_tokens(tokens, &parsed.answer) {
                    Ok(span) => span,
                    Err(e) => {
                        warn!(agent = %spec.agent_id, round, "answer span not aligned ({e}); using last line");
                        flags.push(TurnFlag::SpanFallback);
                        last_line_span(tokens)?
                    }
                };
                (ln_confidence(&span), Some(span.into_tokens()))
            }
        };
        if mode.granularity == Granularity::Categorical && mode.is_enabled() {
            raw = coarsen_categorical(raw).0;
        }

        let mut turn = DebateTurn {
            agent_id: spec.agent_id.clone(),
            round,
            reason: parsed.reason,
            answer_norm: self.matcher.normalize(&parsed.answer, q),
            answer_raw: parsed.answer,
            conf_raw: raw,
            conf_cal: raw,
            flags,
            token_logprobs,
        };
        if self.cfg.calibrates() {
            if let Some(c) = self.cfg.calibrators.get(&spec.agent_id) {
                turn.conf_cal = c.calibrate(&turn)?;
            }
        }
        Ok(turn)
    }
}

/// Best-effort fields from a reply that failed to parse after all retries.
fn fallback_parse(text: &str, expect_sv: bool, err: ParseError, flags: &mut Vec<TurnFlag>) -> ParsedTurn {
    if expect_sv {
        if let Ok(p) = parse_turn(text, false) {
            warn!("verbalized confidence unusable ({err}); defaulting to 0.5");
            flags.push(TurnFlag::ConfidenceDefaulted);
            return p;
        }
        flags.push(TurnFlag::ConfidenceDefaulted);
    }
    warn!("reply has no parsable answer ({err}); using its last line");
    flags.push(TurnFlag::AnswerUnparsed);
    let answer = text
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("")
        .to_string();
    ParsedTurn {
        reason: text.trim().to_string(),
        answer,
        sv_confidence: None,
        flags: Vec::new(),
    }
}
