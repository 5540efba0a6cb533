//! Domain types shared by every module.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfidenceError;

/// How answers to a question are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    #[default]
    FreeText,
    Numeric,
    MultipleChoice,
    LatexMath,
}

/// One benchmark item.
///
/// On disk this is one JSONL line with keys `id`, `question`, `answer`,
/// optional `choices` and optional `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub question: String,
    #[serde(rename = "answer")]
    pub gold_answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    #[serde(default, rename = "kind")]
    pub answer_kind: AnswerKind,
}

impl QuestionRecord {
    pub fn new(id: impl Into<String>, question: impl Into<String>, gold: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            question: question.into(),
            gold_answer: gold.into(),
            choices: None,
            answer_kind: AnswerKind::FreeText,
        }
    }

    pub fn with_choices(mut self, choices: Vec<String>) -> Self {
        self.choices = Some(choices);
        self.answer_kind = AnswerKind::MultipleChoice;
        self
    }

    pub fn with_kind(mut self, kind: AnswerKind) -> Self {
        self.answer_kind = kind;
        self
    }

    pub fn choices(&self) -> &[String] {
        self.choices.as_deref().unwrap_or(&[])
    }
}

/// A probability-valued confidence in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ConfidenceScore(f64);

impl ConfidenceScore {
    pub const NEUTRAL: ConfidenceScore = ConfidenceScore(0.5);

    pub fn new(value: f64) -> Result<Self, ConfidenceError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(ConfidenceError::OutOfRange(value))
        }
    }

    /// Builds a score from any real, clamping into `[0, 1]`. NaN maps to 0.5.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            Self::NEUTRAL
        } else {
            Self(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The 0-100 integer shown to agents.
    pub fn display(self) -> u8 {
        (self.0 * 100.0).round() as u8
    }
}

impl TryFrom<f64> for ConfidenceScore {
    type Error = ConfidenceError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ConfidenceScore> for f64 {
    fn from(c: ConfidenceScore) -> f64 {
        c.0
    }
}

impl fmt::Display for ConfidenceScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display())
    }
}

/// One alternative token offered at a generation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopLogprob {
    pub token: String,
    pub logprob: f64,
}

/// A generated token with its log-probability and the top alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
    #[serde(default)]
    pub top_logprobs: Vec<TopLogprob>,
}

impl TokenLogprob {
    pub fn new(token: impl Into<String>, logprob: f64) -> Self {
        Self {
            token: token.into(),
            logprob,
            top_logprobs: Vec::new(),
        }
    }

    pub fn with_alternatives(mut self, alts: Vec<TopLogprob>) -> Self {
        self.top_logprobs = alts;
        self
    }
}

/// Quality markers attached to a turn when a fallback path was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnFlag {
    /// Verbalized confidence above 100 was clamped.
    ConfidenceClamped,
    /// Verbalized confidence had a fractional part that was dropped.
    ConfidenceTruncated,
    /// Reason field was present but empty.
    EmptyReason,
    /// The output was re-requested with a format reminder.
    Retried,
    /// Verbalized confidence could not be parsed; 0.5 was used.
    ConfidenceDefaulted,
    /// No "Answer:" field was found; the last line was used instead.
    AnswerUnparsed,
    /// Answer tokens could not be aligned; last-line tokens were used.
    SpanFallback,
    /// Confidence is disabled for this run; scores are a neutral placeholder.
    NoConfidence,
}

/// One agent utterance in a debate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTurn {
    pub agent_id: String,
    pub round: usize,
    pub reason: String,
    pub answer_raw: String,
    pub answer_norm: String,
    pub conf_raw: ConfidenceScore,
    pub conf_cal: ConfidenceScore,
    #[serde(default)]
    pub flags: Vec<TurnFlag>,
    /// Log-probabilities of the answer tokens (LN mode only). Kept in memory
    /// for temperature calibration, not written to transcript files.
    #[serde(skip)]
    pub token_logprobs: Option<Vec<TokenLogprob>>,
}

impl DebateTurn {
    pub fn has_flag(&self, flag: TurnFlag) -> bool {
        self.flags.contains(&flag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    #[default]
    ArgmaxConfidence,
    MajorityVote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptStatus {
    #[default]
    Completed,
    Failed,
}

/// Full record of one debate over one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTranscript {
    pub question_id: String,
    pub config_digest: String,
    pub n_agents: usize,
    pub n_rounds: usize,
    pub turns: Vec<DebateTurn>,
    pub final_answer: String,
    pub final_answer_agent: Option<String>,
    pub selection_policy: SelectionPolicy,
    pub rng_seed: u64,
    pub status: TranscriptStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl DebateTranscript {
    pub fn is_completed(&self) -> bool {
        self.status == TranscriptStatus::Completed
    }

    pub fn round_turns(&self, round: usize) -> impl Iterator<Item = &DebateTurn> {
        self.turns.iter().filter(move |t| t.round == round)
    }

    /// Turns of the last round (`n_rounds`).
    pub fn final_turns(&self) -> Vec<&DebateTurn> {
        self.round_turns(self.n_rounds).collect()
    }
}

/// Labelled fields extracted from an agent completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTurn {
    pub reason: String,
    pub answer: String,
    pub sv_confidence: Option<u8>,
    pub flags: Vec<TurnFlag>,
}
