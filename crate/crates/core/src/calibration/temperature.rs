//! Temperature scaling of answer-token logits.
//!
//! Chat APIs expose only the emitted token and its top-k alternatives, so each
//! position is rescaled over that set plus one pseudo-logit holding the
//! remaining probability mass.

use serde::{Deserialize, Serialize};

use super::check_both_classes_by;
use crate::confidence::MIN_PROB;
use crate::error::CalibrationError;
use crate::types::{ConfidenceScore, TokenLogprob};

pub const T_MIN: f64 = 0.05;
pub const T_MAX: f64 = 20.0;
/// Golden-section stopping width on `ln T`.
pub const T_TOL: f64 = 1e-4;
pub const MIN_ALTERNATIVES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureParams {
    #[serde(rename = "T")]
    pub t: f64,
}

impl TemperatureParams {
    pub fn new(t: f64) -> Result<Self, CalibrationError> {
        if t.is_finite() && (T_MIN..=T_MAX).contains(&t) {
            Ok(Self { t })
        } else {
            Err(CalibrationError::InvalidParams(format!(
                "temperature must lie in [{T_MIN}, {T_MAX}], got {t}"
            )))
        }
    }
}

/// Softmax of `logits / t`, max-subtracted.
pub fn apply_temperature(logits: &[f64], t: f64) -> Vec<f64> {
    assert!(t > 0.0, "temperature must be positive");
    assert!(!logits.is_empty(), "logits must be non-empty");
    let scaled: Vec<f64> = logits.iter().map(|z| z / t).collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Answer-token rows of one labelled validation turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureRecord {
    pub tokens: Vec<TokenLogprob>,
    pub correct: bool,
}

/// Logits available at one position: the emitted token first, then distinct
/// alternatives, then the residual-mass pseudo-logit when there is one.
fn position_logits(tok: &TokenLogprob) -> Vec<f64> {
    let mut logits = vec![tok.logprob];
    logits.extend(
        tok.top_logprobs
            .iter()
            .filter(|alt| alt.token != tok.token)
            .map(|alt| alt.logprob),
    );
    let mass: f64 = logits.iter().map(|l| l.exp()).sum();
    let residual = 1.0 - mass;
    if residual > MIN_PROB {
        logits.push(residual.ln());
    }
    logits
}

/// Emitted-token log-probability after rescaling its position by `1/t`.
fn rescaled_logprob(tok: &TokenLogprob, t: f64) -> f64 {
    let logits = position_logits(tok);
    let scaled: Vec<f64> = logits.iter().map(|z| z / t).collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scaled.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    scaled[0] - lse
}

/// LN confidence of an answer span recomputed at temperature `t`.
pub fn rescaled_ln_confidence(tokens: &[TokenLogprob], t: f64) -> ConfidenceScore {
    if tokens.is_empty() {
        return ConfidenceScore::NEUTRAL;
    }
    let mean = tokens
        .iter()
        .map(|tok| rescaled_logprob(tok, t).max(MIN_PROB.ln()))
        .sum::<f64>()
        / tokens.len() as f64;
    ConfidenceScore::clamped(mean.exp())
}

/// Mean binary cross-entropy of rescaled LN confidence against correctness.
pub fn temperature_objective(records: &[TemperatureRecord], t: f64) -> f64 {
    let total: f64 = records
        .iter()
        .map(|r| {
            let c = rescaled_ln_confidence(&r.tokens, t)
                .value()
                .clamp(MIN_PROB, 1.0 - MIN_PROB);
            if r.correct {
                -c.ln()
            } else {
                -(1.0 - c).ln()
            }
        })
        .sum();
    total / records.len() as f64
}

fn golden_section(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Fits `T` by golden-section search on `ln T` over `[0.05, 20]`. The result
/// is never worse than `T = 1` on the training objective.
pub fn fit_temperature(records: &[TemperatureRecord]) -> Result<TemperatureParams, CalibrationError> {
    if records.is_empty() {
        return Err(CalibrationError::InsufficientData { got: 0, need: 1 });
    }
    check_both_classes_by(records.iter().map(|r| r.correct))?;
    for (i, r) in records.iter().enumerate() {
        if r.tokens.is_empty() {
            return Err(CalibrationError::DegenerateData(format!(
                "record {i} has no answer tokens"
            )));
        }
        if let Some(tok) = r.tokens.iter().find(|t| t.top_logprobs.len() < MIN_ALTERNATIVES) {
            return Err(CalibrationError::DegenerateData(format!(
                "record {i}: token {:?} has {} alternatives, need at least {MIN_ALTERNATIVES}",
                tok.token,
                tok.top_logprobs.len()
            )));
        }
    }

    let objective = |log_t: f64| temperature_objective(records, log_t.exp());
    let best = golden_section(T_MIN.ln(), T_MAX.ln(), T_TOL, objective);
    let t = if objective(best) <= objective(0.0) { best.exp() } else { 1.0 };
    TemperatureParams::new(t.clamp(T_MIN, T_MAX))
}
