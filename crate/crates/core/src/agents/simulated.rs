//! Stochastic debater with a known accuracy, a Beta confidence model and a
//! confidence-gap switching rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::{Agent, AgentRequest, AgentResponse, AgentSpec, BackendConfig};
use crate::answer::{answers_match, parse_number};
use crate::calibration::sigmoid;
use crate::confidence::ConfidenceMethod;
use crate::error::AgentError;
use crate::parse::render_turn;
use crate::types::{ConfidenceScore, DebateTurn, QuestionRecord, TokenLogprob, TopLogprob};

/// Mean of the confidence Beta when the drawn answer is right / wrong.
const Q_CORRECT: f64 = 0.8;
const Q_WRONG: f64 = 0.4;
/// Share of the non-answer mass spread over the minor alternatives.
const MINOR_ALT_MASS: f64 = 0.001;
const N_MINOR_ALTS: usize = 4;

fn default_distractors() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedConfig {
    /// Probability `p` that the round-0 answer is correct.
    pub base_accuracy: f64,
    /// `κ_c`: concentration of the confidence Beta.
    pub confidence_sharpness: f64,
    /// `κ_p`: slope of the switching probability in the confidence gap.
    pub persuadability: f64,
    /// Added to every drawn confidence before clamping.
    #[serde(default)]
    pub miscalibration_bias: f64,
    /// Wrong answers generated when the question has no choices.
    #[serde(default = "default_distractors")]
    pub n_distractors: usize,
}

impl SimulatedConfig {
    pub fn new(base_accuracy: f64, confidence_sharpness: f64, persuadability: f64, miscalibration_bias: f64) -> Self {
        Self {
            base_accuracy,
            confidence_sharpness,
            persuadability,
            miscalibration_bias,
            n_distractors: default_distractors(),
        }
    }

    pub(crate) fn validate(&self, agent: &str) -> Result<(), AgentError> {
        let err = |m: String| Err(AgentError::InvalidConfig(format!("simulated agent `{agent}`: {m}")));
        if !(0.0..=1.0).contains(&self.base_accuracy) {
            return err(format!("base_accuracy {} outside [0, 1]", self.base_accuracy));
        }
        if !(self.confidence_sharpness > 0.0 && self.confidence_sharpness.is_finite()) {
            return err("confidence_sharpness must be positive".into());
        }
        if !(self.persuadability >= 0.0 && self.persuadability.is_finite()) {
            return err("persuadability must be non-negative".into());
        }
        if !(-0.3..=0.3).contains(&self.miscalibration_bias) {
            return err(format!("miscalibration_bias {} outside [-0.3, 0.3]", self.miscalibration_bias));
        }
        if self.n_distractors == 0 {
            return err("n_distractors must be at least 1".into());
        }
        Ok(())
    }

    fn draw_confidence(&self, rng: &mut ChaCha8Rng, correct: bool) -> ConfidenceScore {
        let q = if correct { Q_CORRECT } else { Q_WRONG };
        let k = self.confidence_sharpness;
        let beta = Beta::new(k * q + 1.0, k * (1.0 - q) + 1.0).expect("Beta shape parameters are positive");
        ConfidenceScore::clamped(beta.sample(rng) + self.miscalibration_bias)
    }
}

/// The gold answer and the wrong candidates for `question`: the other choices
/// when there are any, otherwise `n_distractors` generated ones.
pub fn candidate_answers(question: &QuestionRecord, n_distractors: usize) -> (String, Vec<String>) {
    let gold = question.gold_answer.trim().to_string();
    let kind = question.answer_kind;
    let choices = question.choices();
    let distractors = if choices.is_empty() {
        match parse_number(&gold) {
            Some(v) => (1..=n_distractors)
                .map(|k| {
                    let off = k.div_ceil(2) as f64 * if k % 2 == 1 { 1.0 } else { -1.0 };
                    let w = v + off;
                    if w.fract() == 0.0 { format!("{}", w as i64) } else { format!("{w}") }
                })
                .collect(),
            None => (1..=n_distractors).map(|k| format!("distractor {k}")).collect(),
        }
    } else {
        choices
            .iter()
            .filter(|c| !answers_match(c, &gold, kind, choices))
            .cloned()
            .collect()
    };
    (gold, distractors)
}

/// Outcome of one simulated turn.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStep {
    pub answer: String,
    pub confidence: ConfidenceScore,
    pub correct: bool,
    /// Agent whose answer was adopted, if the agent switched.
    pub adopted_from: Option<String>,
}

/// One simulated turn. Round 0 draws a fresh answer; later rounds may adopt
/// the most confident differing answer among the other agents' latest turns.
pub fn simulated_step(
    cfg: &SimulatedConfig,
    agent_id: &str,
    question: &QuestionRecord,
    history: &[DebateTurn],
    round: usize,
    seed: u64,
) -> Result<SimStep, AgentError> {
    let (gold, distractors) = candidate_answers(question, cfg.n_distractors);
    if gold.is_empty() || distractors.is_empty() {
        return Err(AgentError::NoCandidateAnswers {
            agent: agent_id.to_string(),
            question: question.id.clone(),
        });
    }
    let kind = question.answer_kind;
    let choices = question.choices();
    let is_correct = |a: &str| answers_match(a, &gold, kind, choices);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let own_last = history.iter().rev().find(|t| t.agent_id == agent_id);
    let (answer, adopted_from) = match own_last {
        Some(own) if round > 0 => {
            let mut latest: Vec<&DebateTurn> = Vec::new();
            for t in history.iter().rev() {
                if t.agent_id != agent_id && !latest.iter().any(|l| l.agent_id == t.agent_id) {
                    latest.push(t);
                }
            }
            latest.reverse();
            let best = latest
                .into_iter()
                .filter(|t| !answers_match(&t.answer_raw, &own.answer_raw, kind, choices))
                .fold(None::<&DebateTurn>, |best, t| match best {
                    Some(b) if b.conf_cal.value() >= t.conf_cal.value() => Some(b),
                    _ => Some(t),
                });
            let u: f64 = rng.random();
            match best {
                Some(b) => {
                    let gap = b.conf_cal.value() - own.conf_cal.value();
                    let p_switch = if gap > 0.0 { sigmoid(cfg.persuadability * gap) } else { 0.0 };
                    if u < p_switch {
                        (b.answer_raw.clone(), Some(b.agent_id.clone()))
                    } else {
                        (own.answer_raw.clone(), None)
                    }
                }
                None => (own.answer_raw.clone(), None),
            }
        }
        _ => {
            let u: f64 = rng.random();
            if u < cfg.base_accuracy {
                (gold.clone(), None)
            } else {
                (distractors[rng.random_range(0..distractors.len())].clone(), None)
            }
        }
    };
    let correct = is_correct(&answer);
    let confidence = cfg.draw_confidence(&mut rng, correct);
    Ok(SimStep {
        answer,
        confidence,
        correct,
        adopted_from,
    })
}

pub struct SimulatedAgent {
    spec: AgentSpec,
    cfg: SimulatedConfig,
}

impl SimulatedAgent {
    pub fn new(spec: AgentSpec) -> Result<Self, AgentError> {
        let BackendConfig::Simulated(cfg) = spec.backend else {
            return Err(AgentError::InvalidConfig(format!(
                "agent `{}` is not a simulated backend",
                spec.agent_id
            )));
        };
        cfg.validate(&spec.agent_id)?;
        Ok(Self { spec, cfg })
    }

    pub fn config(&self) -> &SimulatedConfig {
        &self.cfg
    }
}

/// Completion tokens whose answer token carries probability `c`, with one
/// main rival and four minor alternatives.
fn answer_tokens(prefix: &str, answer: &str, rival: &str, c: f64) -> Vec<TokenLogprob> {
    let c = c.clamp(1e-6, 1.0 - 1e-6);
    let rest = 1.0 - c;
    let mut alts = vec![
        TopLogprob { token: answer.to_string(), logprob: c.ln() },
        TopLogprob {
            token: rival.to_string(),
            logprob: (rest * (1.0 - N_MINOR_ALTS as f64 * MINOR_ALT_MASS)).ln(),
        },
    ];
    alts.extend((0..N_MINOR_ALTS).map(|k| TopLogprob {
        token: format!("<alt{k}>"),
        logprob: (rest * MINOR_ALT_MASS).ln(),
    }));
    vec![
        TokenLogprob::new(prefix, 0.0),
        TokenLogprob::new(answer, c.ln()).with_alternatives(alts),
    ]
}

impl Agent for SimulatedAgent {
    fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    fn respond(&self, request: &AgentRequest<'_>) -> Result<AgentResponse, AgentError> {
        let step = simulated_step(
            &self.cfg,
            &self.spec.agent_id,
            request.question,
            request.history,
            request.round,
            request.seed,
        )?;
        let reason = match (&step.adopted_from, request.round) {
            (_, 0) => "Working through the question independently.".to_string(),
            (Some(other), _) => format!("The argument from {other} is more convincing, so I adopt it."),
            (None, _) => "After weighing the other arguments I keep my position.".to_string(),
        };
        let (text, token_logprobs) = match request.confidence_mode.method {
            ConfidenceMethod::Sv => (render_turn(&reason, &step.answer, Some(step.confidence.display())), None),
            ConfidenceMethod::Ln | ConfidenceMethod::None if request.need_logprobs => {
                let (gold, distractors) = candidate_answers(request.question, self.cfg.n_distractors);
                let rival = if step.correct { distractors[0].clone() } else { gold };
                let tokens = answer_tokens(&format!("Reason: {reason}\nAnswer: "), &step.answer, &rival, step.confidence.value());
                (tokens.iter().map(|t| t.token.as_str()).collect(), Some(tokens))
            }
            _ => (render_turn(&reason, &step.answer, None), None),
        };
        Ok(AgentResponse {
            text,
            token_logprobs,
            latency_ms: 0,
            attempt: request.attempt,
        })
    }
}
