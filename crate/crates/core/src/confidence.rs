//! Raw confidence elicitation: length-normalized answer-token probability
//! (LN), self-verbalized scores (SV) and categorical coarsening.

use serde::{Deserialize, Serialize};

use crate::error::ConfidenceError;
use crate::parse::answer_value_range;
use crate::types::{ConfidenceScore, ParsedTurn, TokenLogprob};

/// Probabilities are clamped to at least this before taking logs.
pub const MIN_PROB: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMethod {
    /// Length-normalized probability of the answer tokens.
    #[serde(alias = "LN")]
    Ln,
    /// Score verbalized by the model itself, 0-100.
    #[default]
    #[serde(alias = "SV")]
    Sv,
    /// No confidence is elicited or shown.
    #[serde(alias = "None")]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    #[default]
    Raw,
    /// Scores shown as 0-10.
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ConfidenceMode {
    pub method: ConfidenceMethod,
    #[serde(default)]
    pub granularity: Granularity,
}

impl ConfidenceMode {
    pub const LN: ConfidenceMode = ConfidenceMode {
        method: ConfidenceMethod::Ln,
        granularity: Granularity::Raw,
    };
    pub const SV: ConfidenceMode = ConfidenceMode {
        method: ConfidenceMethod::Sv,
        granularity: Granularity::Raw,
    };
    pub const NONE: ConfidenceMode = ConfidenceMode {
        method: ConfidenceMethod::None,
        granularity: Granularity::Raw,
    };

    pub fn categorical(mut self) -> Self {
        self.granularity = Granularity::Categorical;
        self
    }

    pub fn is_enabled(self) -> bool {
        self.method != ConfidenceMethod::None
    }

    pub fn needs_logprobs(self) -> bool {
        self.method == ConfidenceMethod::Ln
    }
}

/// The tokens whose probabilities make up the answer.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerTokenSpan {
    tokens: Vec<TokenLogprob>,
}

impl AnswerTokenSpan {
    pub fn new(tokens: Vec<TokenLogprob>) -> Result<Self, ConfidenceError> {
        if tokens.is_empty() {
            return Err(ConfidenceError::EmptySpan);
        }
        for t in &tokens {
            if t.logprob.is_nan() || t.logprob > 1e-9 {
                return Err(ConfidenceError::InvalidProbability(t.logprob.exp()));
            }
        }
        Ok(Self { tokens })
    }

    /// Span from plain probabilities.
    pub fn from_probs(probs: &[f64]) -> Result<Self, ConfidenceError> {
        if let Some(&bad) = probs.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(ConfidenceError::InvalidProbability(bad));
        }
        Self::new(
            probs
                .iter()
                .enumerate()
                .map(|(i, p)| TokenLogprob::new(format!("t{i}"), p.ln()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[TokenLogprob] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<TokenLogprob> {
        self.tokens
    }

    pub fn probs(&self) -> Vec<f64> {
        self.tokens.iter().map(|t| t.logprob.exp().min(1.0)).collect()
    }

    pub fn text(&self) -> String {
        self.tokens.iter().map(|t| t.token.as_str()).collect()
    }
}

fn token_offsets(tokens: &[TokenLogprob]) -> (String, Vec<(usize, usize)>) {
    let mut text = String::new();
    let mut offsets = Vec::with_capacity(tokens.len());
    for t in tokens {
        let start = text.len();
        text.push_str(&t.token);
        offsets.push((start, text.len()));
    }
    (text, offsets)
}

fn covering_window(tokens: &[TokenLogprob], offsets: &[(usize, usize)], lo: usize, hi: usize) -> Vec<TokenLogprob> {
    tokens
        .iter()
        .zip(offsets)
        .filter(|(_, &(s, e))| e > lo && s < hi)
        .map(|(t, _)| t.clone())
        .collect()
}

/// Finds the minimal contiguous token window covering the answer value.
///
/// The window starts at the first token overlapping the answer text, so the
/// `Answer:` label is left out unless a token straddles label and value.
pub fn extract_answer_tokens(
    turn_tokens: &[TokenLogprob],
    parsed_answer: &str,
) -> Result<AnswerTokenSpan, ConfidenceError> {
    let not_found = || ConfidenceError::SpanNotFound(parsed_answer.to_string());
    let (text, offsets) = token_offsets(turn_tokens);
    let answer = parsed_answer.trim();
    if answer.is_empty() {
        return Err(not_found());
    }
    let range = match answer_value_range(&text) {
        Some((s, e)) if text[s..e] == *answer => Some((s, e)),
        Some((s, _)) => text[s..].find(answer).map(|i| (s + i, s + i + answer.len())),
        None => None,
    }
    .or_else(|| text.rfind(answer).map(|i| (i, i + answer.len())))
    .ok_or_else(not_found)?;

    let window = covering_window(turn_tokens, &offsets, range.0, range.1);
    AnswerTokenSpan::new(window).map_err(|e| match e {
        ConfidenceError::EmptySpan => not_found(),
        other => other,
    })
}

/// Tokens of the last non-blank line; used when the answer cannot be aligned.
pub fn last_line_span(turn_tokens: &[TokenLogprob]) -> Result<AnswerTokenSpan, ConfidenceError> {
    let (text, offsets) = token_offsets(turn_tokens);
    let trimmed = text.trim_end();
    let lo = trimmed.rfind('\n').map_or(0, |i| i + 1);
    let lo = lo + (trimmed[lo..].len() - trimmed[lo..].trim_start().len());
    if lo >= trimmed.len() {
        return Err(ConfidenceError::EmptySpan);
    }
    AnswerTokenSpan::new(covering_window(turn_tokens, &offsets, lo, trimmed.len()))
}

/// Geometric mean of the answer-token probabilities, `(prod p_i)^(1/n)`,
/// evaluated in log space.
pub fn ln_confidence(span: &AnswerTokenSpan) -> ConfidenceScore {
    let n = span.len() as f64;
    let mean_log = span
        .tokens
        .iter()
        .map(|t| t.logprob.min(0.0).max(MIN_PROB.ln()))
        .sum::<f64>()
        / n;
    ConfidenceScore::clamped(mean_log.exp())
}

/// Verbalized 0-100 score scaled to `[0, 1]`.
pub fn sv_confidence(parsed: &ParsedTurn) -> Result<ConfidenceScore, ConfidenceError> {
    let v = parsed.sv_confidence.ok_or(ConfidenceError::MissingConfidence)?;
    Ok(ConfidenceScore::clamped(f64::from(v.min(100)) / 100.0))
}

/// Rounds a score onto the 0-10 scale (half up); returns `(score, shown digit)`.
pub fn coarsen_categorical(score: ConfidenceScore) -> (ConfidenceScore, u8) {
    // The small epsilon keeps values like 0.05 from falling below the tie.
    let digit = ((score.value() * 100.0) / 10.0 + 0.5 + 1e-9).floor().clamp(0.0, 10.0);
    (ConfidenceScore::clamped(digit / 10.0), digit as u8)
}
