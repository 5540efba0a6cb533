//! Multi-agent debate with calibrated confidence expressions.

pub mod agents;
pub mod answer;
pub mod calibration;
pub mod confidence;
pub mod engine;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod parse;
pub mod types;

pub use error::{Error, Result};
pub use types::*;
