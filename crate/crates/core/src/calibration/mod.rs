//! Post-hoc calibration of raw confidence scores.
//!
//! Calibrators are fitted on initial-round answers from a validation split,
//! saved as `.cal.json` files and loaded read-only by debate workers.

mod histogram;
mod platt;
mod temperature;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use histogram::{
    apply_histogram, bin_edge, bin_index, fit_histogram, HistogramParams, DEFAULT_BINS,
};
pub use platt::{
    apply_platt, fit_platt, platt_objective, sigmoid, PlattParams, PLATT_L2, PLATT_MAX_ITER,
    PLATT_MIN_SAMPLES, PLATT_PARAM_BOUND, PLATT_TOL,
};
pub use temperature::{
    apply_temperature, fit_temperature, rescaled_ln_confidence, temperature_objective,
    TemperatureParams, TemperatureRecord, MIN_ALTERNATIVES, T_MAX, T_MIN, T_TOL,
};

use crate::confidence::{ConfidenceMethod, ConfidenceMode};
use crate::error::CalibrationError;
use crate::types::{ConfidenceScore, DebateTurn};

/// File extension of saved calibrators.
pub const CALIBRATOR_EXT: &str = "cal.json";

/// A raw score with whether the answer it accompanied was correct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub score: ConfidenceScore,
    pub correct: bool,
}

impl LabeledScore {
    pub fn new(score: ConfidenceScore, correct: bool) -> Self {
        Self { score, correct }
    }
}

pub(crate) fn check_both_classes_by(labels: impl Iterator<Item = bool>) -> Result<(), CalibrationError> {
    let (mut pos, mut neg) = (0usize, 0usize);
    for l in labels {
        if l {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    if pos == 0 || neg == 0 {
        return Err(CalibrationError::DegenerateData(format!(
            "both correct and incorrect samples are required ({pos} correct, {neg} incorrect)"
        )));
    }
    Ok(())
}

pub(crate) fn check_both_classes(data: &[LabeledScore]) -> Result<(), CalibrationError> {
    check_both_classes_by(data.iter().map(|d| d.correct))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    Platt,
    Histogram,
    Temperature,
    Vanilla,
}

impl CalibrationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CalibrationMethod::Platt => "platt",
            CalibrationMethod::Histogram => "histogram",
            CalibrationMethod::Temperature => "temperature",
            CalibrationMethod::Vanilla => "vanilla",
        }
    }
}

impl fmt::Display for CalibrationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CalibrationMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "platt" => Ok(Self::Platt),
            "histogram" | "histo" => Ok(Self::Histogram),
            "temperature" | "temp" => Ok(Self::Temperature),
            "vanilla" => Ok(Self::Vanilla),
            other => Err(format!("unknown calibration method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CalibratorParams {
    Platt(PlattParams),
    Histogram(HistogramParams),
    Temperature(TemperatureParams),
    Vanilla,
}

impl CalibratorParams {
    pub fn method(&self) -> CalibrationMethod {
        match self {
            CalibratorParams::Platt(_) => CalibrationMethod::Platt,
            CalibratorParams::Histogram(_) => CalibrationMethod::Histogram,
            CalibratorParams::Temperature(_) => CalibrationMethod::Temperature,
            CalibratorParams::Vanilla => CalibrationMethod::Vanilla,
        }
    }
}

/// Where a calibrator's training data came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model_id: String,
    pub dataset_id: String,
    pub confidence_mode: ConfidenceMode,
    pub n_samples: usize,
    pub fitted_at: String,
}

impl Provenance {
    pub fn new(model_id: impl Into<String>, dataset_id: impl Into<String>, mode: ConfidenceMode, n_samples: usize) -> Self {
        Self {
            model_id: model_id.into(),
            dataset_id: dataset_id.into(),
            confidence_mode: mode,
            n_samples,
            fitted_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// A fitted calibration model.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrator {
    pub params: CalibratorParams,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct CalibratorFile {
    method: String,
    #[serde(default)]
    params: serde_json::Value,
    provenance: Provenance,
}

impl Serialize for Calibrator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error;
        let params = match &self.params {
            CalibratorParams::Platt(p) => serde_json::to_value(p),
            CalibratorParams::Histogram(p) => serde_json::to_value(p),
            CalibratorParams::Temperature(p) => serde_json::to_value(p),
            CalibratorParams::Vanilla => Ok(serde_json::Value::Null),
        }
        .map_err(S::Error::custom)?;
        CalibratorFile {
            method: self.method().as_str().to_string(),
            params,
            provenance: self.provenance.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Calibrator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let file = CalibratorFile::deserialize(deserializer)?;
        let method: CalibrationMethod = match file.method.as_str() {
            "platt" | "histogram" | "temperature" | "vanilla" => file.method.parse().map_err(D::Error::custom)?,
            other => return Err(D::Error::custom(format!("unknown calibration method `{other}`"))),
        };
        let params = match method {
            CalibrationMethod::Platt => {
                let p: PlattParams = serde_json::from_value(file.params).map_err(D::Error::custom)?;
                p.validate().map_err(D::Error::custom)?;
                CalibratorParams::Platt(p)
            }
            CalibrationMethod::Histogram => {
                let p: HistogramParams = serde_json::from_value(file.params).map_err(D::Error::custom)?;
                p.validate().map_err(D::Error::custom)?;
                CalibratorParams::Histogram(p)
            }
            CalibrationMethod::Temperature => {
                let p: TemperatureParams = serde_json::from_value(file.params).map_err(D::Error::custom)?;
                TemperatureParams::new(p.t).map_err(D::Error::custom)?;
                CalibratorParams::Temperature(p)
            }
            CalibrationMethod::Vanilla => CalibratorParams::Vanilla,
        };
        Ok(Calibrator {
            params,
            provenance: file.provenance,
        })
    }
}

impl Calibrator {
    pub fn new(params: CalibratorParams, provenance: Provenance) -> Self {
        Self { params, provenance }
    }

    /// The identity calibrator.
    pub fn vanilla(provenance: Provenance) -> Self {
        Self::new(CalibratorParams::Vanilla, provenance)
    }

    pub fn method(&self) -> CalibrationMethod {
        self.params.method()
    }

    pub fn is_vanilla(&self) -> bool {
        matches!(self.params, CalibratorParams::Vanilla)
    }

    /// Fits `method` on labelled raw scores (and, for temperature, answer-token rows).
    pub fn fit(
        method: CalibrationMethod,
        scores: &[LabeledScore],
        token_records: &[TemperatureRecord],
        bins: usize,
        provenance: Provenance,
    ) -> Result<Self, CalibrationError> {
        let params = match method {
            CalibrationMethod::Platt => CalibratorParams::Platt(fit_platt(scores)?),
            CalibrationMethod::Histogram => CalibratorParams::Histogram(fit_histogram(scores, bins)?),
            CalibrationMethod::Temperature => {
                if provenance.confidence_mode.method != ConfidenceMethod::Ln {
                    return Err(CalibrationError::IncompatibleCalibrator {
                        method: method.to_string(),
                        reason: "temperature scaling needs LN confidence".into(),
                    });
                }
                CalibratorParams::Temperature(fit_temperature(token_records)?)
            }
            CalibrationMethod::Vanilla => CalibratorParams::Vanilla,
        };
        Ok(Self::new(params, provenance))
    }

    /// Checks that this calibrator can be used with a confidence mode.
    pub fn check_compatible(&self, mode: ConfidenceMode) -> Result<(), CalibrationError> {
        if self.method() == CalibrationMethod::Temperature && mode.method != ConfidenceMethod::Ln {
            return Err(CalibrationError::IncompatibleCalibrator {
                method: self.method().to_string(),
                reason: format!("temperature scaling needs LN confidence, run uses {:?}", mode.method),
            });
        }
        Ok(())
    }

    /// Maps a raw score. Temperature calibrators need token rows and cannot
    /// be applied here.
    pub fn apply_score(&self, raw: ConfidenceScore) -> Result<ConfidenceScore, CalibrationError> {
        match &self.params {
            CalibratorParams::Vanilla => Ok(raw),
            CalibratorParams::Platt(p) => Ok(apply_platt(p, raw)),
            CalibratorParams::Histogram(p) => Ok(apply_histogram(p, raw)),
            CalibratorParams::Temperature(_) => Err(CalibrationError::IncompatibleCalibrator {
                method: self.method().to_string(),
                reason: "temperature scaling needs answer-token log-probabilities".into(),
            }),
        }
    }

    /// Calibrated confidence for a turn.
    pub fn calibrate(&self, turn: &DebateTurn) -> Result<ConfidenceScore, CalibrationError> {
        match &self.params {
            CalibratorParams::Temperature(p) => match &turn.token_logprobs {
                Some(tokens) if !tokens.is_empty() => Ok(rescaled_ln_confidence(tokens, p.t)),
                _ => Err(CalibrationError::IncompatibleCalibrator {
                    method: self.method().to_string(),
                    reason: format!(
                        "turn of `{}` (round {}) carries no answer-token log-probabilities",
                        turn.agent_id, turn.round
                    ),
                }),
            },
            _ => self.apply_score(turn.conf_raw),
        }
    }
}

/// Convenience wrapper for [`Calibrator::calibrate`].
pub fn calibrate(c: &Calibrator, turn: &DebateTurn) -> Result<ConfidenceScore, CalibrationError> {
    c.calibrate(turn)
}

pub fn save_calibrator(c: &Calibrator, path: &Path) -> Result<(), CalibrationError> {
    let json = serde_json::to_string_pretty(c).map_err(|e| CalibrationError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, json + "\n").map_err(|source| CalibrationError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_calibrator(path: &Path) -> Result<Calibrator, CalibrationError> {
    let text = std::fs::read_to_string(path).map_err(|source| CalibrationError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CalibrationError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Loads a calibrator and reports (without failing) a confidence-mode mismatch.
pub fn load_calibrator_for(path: &Path, mode: ConfidenceMode) -> Result<(Calibrator, Option<String>), CalibrationError> {
    let c = load_calibrator(path)?;
    let warning = (c.provenance.confidence_mode != mode).then(|| {
        format!(
            "calibrator {} was fitted for {:?} but the run uses {:?}",
            path.display(),
            c.provenance.confidence_mode,
            mode
        )
    });
    if let Some(w) = &warning {
        tracing::warn!("{w}");
    }
    Ok((c, warning))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TokenLogprob;

    fn prov(mode: ConfidenceMode) -> Provenance {
        Provenance {
            model_id: "m".into(),
            dataset_id: "d".into(),
            confidence_mode: mode,
            n_samples: 10,
            fitted_at: "2026-01-01T00:00:00Z".into(),
        }
    }

    fn turn(conf: f64) -> DebateTurn {
        DebateTurn {
            agent_id: "a".into(),
            round: 0,
            reason: String::new(),
            answer_raw: "x".into(),
            answer_norm: "x".into(),
            conf_raw: ConfidenceScore::new(conf).unwrap(),
            conf_cal: ConfidenceScore::new(conf).unwrap(),
            flags: vec![],
            token_logprobs: None,
        }
    }

    #[test]
    fn calibrate_dispatch() {
        let v = Calibrator::vanilla(prov(ConfidenceMode::SV));
        assert_eq!(v.calibrate(&turn(0.7)).unwrap().value(), 0.7);
        let p = Calibrator::new(CalibratorParams::Platt(PlattParams { a: 0.0, b: 0.0 }), prov(ConfidenceMode::SV));
        assert_eq!(p.calibrate(&turn(0.9)).unwrap().value(), 0.5);
    }

    #[test]
    fn temperature_needs_tokens() {
        let t = Calibrator::new(
            CalibratorParams::Temperature(TemperatureParams { t: 1.0 }),
            prov(ConfidenceMode::LN),
        );
        assert!(matches!(t.calibrate(&turn(0.4)), Err(CalibrationError::IncompatibleCalibrator { .. })));
        let mut tr = turn(0.4);
        tr.token_logprobs = Some(vec![TokenLogprob::new("B", 0.4f64.ln())]);
        assert!((t.calibrate(&tr).unwrap().value() - 0.4).abs() < 1e-12);
        assert!(t.check_compatible(ConfidenceMode::SV).is_err());
        assert!(t.check_compatible(ConfidenceMode::LN).is_ok());
    }

    #[test]
    fn unknown_method_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.cal.json");
        std::fs::write(
            &path,
            r#"{"method":"isotonic","params":null,"provenance":{"model_id":"m","dataset_id":"d","confidence_mode":{"method":"sv","granularity":"raw"},"n_samples":1,"fitted_at":"t"}}"#,
        )
        .unwrap();
        assert!(matches!(load_calibrator(&path), Err(CalibrationError::Format { .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.cal.json");
        let c = Calibrator::new(
            CalibratorParams::Platt(PlattParams { a: 2.000000000000001, b: -0.1 - 0.2 }),
            prov(ConfidenceMode::LN),
        );
        save_calibrator(&c, &path).unwrap();
        assert_eq!(load_calibrator(&path).unwrap(), c);
    }

    #[test]
    fn mode_mismatch_warns_but_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.cal.json");
        save_calibrator(&Calibrator::vanilla(prov(ConfidenceMode::SV)), &path).unwrap();
        let (c, warning) = load_calibrator_for(&path, ConfidenceMode::LN).unwrap();
        assert!(c.is_vanilla());
        assert!(warning.is_some());
        let (_, warning) = load_calibrator_for(&path, ConfidenceMode::SV).unwrap();
        assert!(warning.is_none());
    }
}
