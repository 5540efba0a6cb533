//! Platt scaling: a two-parameter logistic fit `P(correct | s) = σ(A·s + B)`.

use serde::{Deserialize, Serialize};

use super::{check_both_classes, LabeledScore};
use crate::error::CalibrationError;
use crate::types::ConfidenceScore;

/// L2 penalty on `(A, B)`; keeps separable data finite.
pub const PLATT_L2: f64 = 1e-6;
pub const PLATT_MAX_ITER: usize = 200;
pub const PLATT_TOL: f64 = 1e-8;
pub const PLATT_PARAM_BOUND: f64 = 1e3;
pub const PLATT_MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

impl PlattParams {
    pub fn new(a: f64, b: f64) -> Result<Self, CalibrationError> {
        let p = Self { a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        let ok = |v: f64| v.is_finite() && v.abs() <= PLATT_PARAM_BOUND;
        if ok(self.a) && ok(self.b) {
            Ok(())
        } else {
            Err(CalibrationError::InvalidParams(format!(
                "Platt parameters must be finite and within ±{PLATT_PARAM_BOUND}: A={}, B={}",
                self.a, self.b
            )))
        }
    }
}

/// Logistic function, stable for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Penalized negative log-likelihood minimized by [`fit_platt`].
pub fn platt_objective(data: &[LabeledScore], a: f64, b: f64) -> f64 {
    let nll: f64 = data
        .iter()
        .map(|d| {
            let z = a * d.score.value() + b;
            // -log σ(z) = softplus(-z); -log(1-σ(z)) = softplus(z)
            if d.correct {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    nll + PLATT_L2 * (a * a + b * b)
}

/// Newton's method with backtracking on the penalized log-likelihood.
pub fn fit_platt(data: &[LabeledScore]) -> Result<PlattParams, CalibrationError> {
    if data.len() < PLATT_MIN_SAMPLES {
        return Err(CalibrationError::InsufficientData {
            got: data.len(),
            need: PLATT_MIN_SAMPLES,
        });
    }
    check_both_classes(data)?;

    let (mut a, mut b) = (0.0_f64, 0.0_f64);
    let mut obj = platt_objective(data, a, b);
    for _ in 0..PLATT_MAX_ITER {
        let (mut ga, mut gb) = (2.0 * PLATT_L2 * a, 2.0 * PLATT_L2 * b);
        let (mut haa, mut hab, mut hbb) = (2.0 * PLATT_L2, 0.0, 2.0 * PLATT_L2);
        for d in data {
            let s = d.score.value();
            let p = sigmoid(a * s + b);
            let r = p - if d.correct { 1.0 } else { 0.0 };
            let w = p * (1.0 - p);
            ga += r * s;
            gb += r;
            haa += w * s * s;
            hab += w * s;
            hbb += w;
        }
        let det = haa * hbb - hab * hab;
        if !(det.is_finite() && det > 0.0) {
            break;
        }
        let da = (hbb * ga - hab * gb) / det;
        let db = (haa * gb - hab * ga) / det;

        let mut step = 1.0;
        let (mut na, mut nb, mut nobj);
        loop {
            na = a - step * da;
            nb = b - step * db;
            nobj = platt_objective(data, na, nb);
            if nobj <= obj || step < 1e-10 {
                break;
            }
            step *= 0.5;
        }
        let change = (na - a).abs().max((nb - b).abs());
        a = na;
        b = nb;
        obj = nobj;
        if change < PLATT_TOL {
            break;
        }
    }
    PlattParams::new(
        a.clamp(-PLATT_PARAM_BOUND, PLATT_PARAM_BOUND),
        b.clamp(-PLATT_PARAM_BOUND, PLATT_PARAM_BOUND),
    )
}

pub fn apply_platt(p: &PlattParams, s: ConfidenceScore) -> ConfidenceScore {
    ConfidenceScore::clamped(sigmoid(p.a * s.value() + p.b))
}
