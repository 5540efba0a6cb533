//! Error types for every layer of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Failures while extracting the labelled fields from an agent completion.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing field `{0}` in agent output")]
    MissingField(String),
    #[error("confidence field does not contain an integer in [0, 100]: {0:?}")]
    MalformedConfidence(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("no number could be extracted from {0:?}")]
    UnparsableNumeric(String),
    #[error("cannot normalize an empty answer")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfidenceError {
    #[error("confidence {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("answer text {0:?} could not be located in the token stream")]
    SpanNotFound(String),
    #[error("answer token span is empty")]
    EmptySpan,
    #[error("token probability {0} is outside (0, 1]")]
    InvalidProbability(f64),
    #[error("turn has no self-verbalized confidence")]
    MissingConfidence,
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("degenerate calibration data: {0}")]
    DegenerateData(String),
    #[error("not enough calibration samples: got {got}, need at least {need}")]
    InsufficientData { got: usize, need: usize },
    #[error("calibrator `{method}` cannot be applied: {reason}")]
    IncompatibleCalibrator { method: String, reason: String },
    #[error("invalid calibrator parameters: {0}")]
    InvalidParams(String),
    #[error("calibrator file format error in {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("calibrator io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("agent `{agent}` backend unavailable after {attempts} attempt(s): {message}")]
    BackendUnavailable {
        agent: String,
        attempts: u32,
        message: String,
    },
    #[error("agent `{0}` cannot provide token log-probabilities")]
    LogprobsUnsupported(String),
    #[error("agent `{agent}` has no candidate answers for question `{question}`")]
    NoCandidateAnswers { agent: String, question: String },
    #[error("scripted agent `{agent}` has no entry for question `{question}` round {round}")]
    MissingScript {
        agent: String,
        question: String,
        round: usize,
    },
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
    #[error("agent io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid debate configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no transcripts to score")]
    EmptyInput,
    #[error("win rate is defined for two-agent debates only (found {0} agents)")]
    MoreThanTwoAgents(usize),
    #[error("{unknown} transcript(s) reference question ids absent from the dataset (first: {first})")]
    IdMismatch { unknown: usize, first: String },
}

/// Top-level error for dataset handling and the command pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Dataset {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
