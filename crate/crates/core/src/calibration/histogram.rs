//! Histogram binning over equal-width bins on `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::LabeledScore;
use crate::error::CalibrationError;
use crate::types::ConfidenceScore;

pub const DEFAULT_BINS: usize = 10;

/// Left edge of bin `k` out of `m`.
pub fn bin_edge(k: usize, m: usize) -> f64 {
    k as f64 / m as f64
}

/// Equal-width bin of `s` among `m` bins. A score on an interior edge goes to
/// the higher bin; `1.0` goes to the last bin.
pub fn bin_index(s: f64, m: usize) -> usize {
    debug_assert!(m >= 1);
    let mut idx = ((s * m as f64).floor().max(0.0) as usize).min(m - 1);
    while idx + 1 < m && s >= bin_edge(idx + 1, m) {
        idx += 1;
    }
    while idx > 0 && s < bin_edge(idx, m) {
        idx -= 1;
    }
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramParams {
    pub bin_edges: Vec<f64>,
    pub bin_values: Vec<f64>,
    /// Overall fraction correct; the value of bins that saw no samples.
    pub fallback_value: f64,
}

impl HistogramParams {
    pub fn n_bins(&self) -> usize {
        self.bin_values.len()
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        let m = self.bin_values.len();
        let bad = |msg: &str| Err(CalibrationError::InvalidParams(msg.to_string()));
        if m == 0 || self.bin_edges.len() != m + 1 {
            return bad("histogram needs one value per bin and m+1 edges");
        }
        if self.bin_edges[0] != 0.0 || self.bin_edges[m] != 1.0 {
            return bad("histogram edges must span [0, 1]");
        }
        if self.bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return bad("histogram edges must be strictly increasing");
        }
        if self
            .bin_values
            .iter()
            .chain(std::iter::once(&self.fallback_value))
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return bad("histogram values must lie in [0, 1]");
        }
        Ok(())
    }

    /// Bin of `s` under these edges.
    pub fn bin_of(&self, s: f64) -> usize {
        bin_index(s, self.n_bins())
    }
}

pub fn fit_histogram(data: &[LabeledScore], bins: usize) -> Result<HistogramParams, CalibrationError> {
    if data.is_empty() {
        return Err(CalibrationError::InsufficientData { got: 0, need: 1 });
    }
    if bins == 0 {
        return Err(CalibrationError::InvalidParams("bins must be >= 1".into()));
    }
    let mut counts = vec![0usize; bins];
    let mut correct = vec![0usize; bins];
    for d in data {
        let k = bin_index(d.score.value(), bins);
        counts[k] += 1;
        correct[k] += usize::from(d.correct);
    }
    let total_correct: usize = correct.iter().sum();
    let fallback_value = total_correct as f64 / data.len() as f64;
    let bin_values = counts
        .iter()
        .zip(&correct)
        .map(|(&n, &c)| if n == 0 { fallback_value } else { c as f64 / n as f64 })
        .collect();
    Ok(HistogramParams {
        bin_edges: (0..=bins).map(|k| bin_edge(k, bins)).collect(),
        bin_values,
        fallback_value,
    })
}

pub fn apply_histogram(p: &HistogramParams, s: ConfidenceScore) -> ConfidenceScore {
    ConfidenceScore::clamped(p.bin_values[p.bin_of(s.value())])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ls(s: f64, c: bool) -> LabeledScore {
        LabeledScore::new(ConfidenceScore::new(s).unwrap(), c)
    }

    #[test]
    fn edge_rule() {
        assert_eq!(bin_index(0.1, 10), 1);
        assert_eq!(bin_index(0.0999999, 10), 0);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.0, 10), 0);
        for m in 1..=50 {
            for k in 1..m {
                assert_eq!(bin_index(bin_edge(k, m), m), k, "edge {k}/{m}");
            }
        }
        assert_eq!(bin_index(0.3, 10), 3);
        assert_eq!(bin_index(0.7, 10), 7);
    }

    #[test]
    fn counting_and_fallback() {
        // bin 9: three right, one wrong; bin 0: two right, two wrong (overall 5/8)
        let mut data = vec![ls(0.95, true), ls(0.91, true), ls(0.99, true), ls(0.93, false)];
        data.extend([ls(0.01, true), ls(0.02, true), ls(0.03, false), ls(0.04, false)]);
        let h = fit_histogram(&data, 10).unwrap();
        assert_eq!(h.bin_values[9], 0.75);
        assert_eq!(h.bin_values[0], 0.5);
        assert_eq!(h.fallback_value, 0.625);
        assert_eq!(h.bin_values[5], 0.625);
        h.validate().unwrap();
    }

    #[test]
    fn empty_bin_gets_global_rate() {
        let data: Vec<_> = (0..10).map(|i| ls(0.05, i < 6)).collect();
        let h = fit_histogram(&data, 10).unwrap();
        assert_eq!(h.bin_values[4], 0.6);
    }

    #[test]
    fn apply_lookup() {
        let mut h = fit_histogram(&[ls(0.5, true)], 10).unwrap();
        h.bin_values = (0..10).map(|k| k as f64 / 10.0).collect();
        h.bin_values[9] = 0.8;
        let c = |v| ConfidenceScore::new(v).unwrap();
        assert_eq!(apply_histogram(&h, c(0.95)).value(), 0.8);
        assert_eq!(apply_histogram(&h, c(0.1)).value(), h.bin_values[1]);
        assert_eq!(apply_histogram(&h, c(1.0)).value(), 0.8);
    }

    #[test]
    fn empty_data_rejected() {
        assert!(fit_histogram(&[], 10).is_err());
        assert!(fit_histogram(&[ls(0.2, true)], 0).is_err());
    }
}
