//! The F-alpha score and its confusion-count building blocks.

use serde::{Deserialize, Serialize};

use crate::error::{EstimateError, Result};

/// Precision/recall trade-off: 1 selects precision, 0 recall, 0.5 F1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const F1: Alpha = Alpha(0.5);
    pub const PRECISION: Alpha = Alpha(1.0);
    pub const RECALL: Alpha = Alpha(0.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self(alpha))
        } else {
            Err(EstimateError::InvalidConfig(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// v(y, ŷ) = α·ŷ + (1 − α)·y, the per-item weight of the F-score ratio.
    pub fn relevance(self, label: bool, predicted: bool) -> f64 {
        self.0 * f64::from(u8::from(predicted)) + (1.0 - self.0) * f64::from(u8::from(label))
    }
}

impl Default for Alpha {
    fn default() -> Self {
        Self::F1
    }
}

impl TryFrom<f64> for Alpha {
    type Error = EstimateError;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// Possibly fractional confusion counts (expected counts are fractional).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Confusion {
    pub tp: f64,
    pub fp: f64,
    pub fn_: f64,
}

impl Confusion {
    pub fn add(&mut self, label: bool, predicted: bool) {
        match (label, predicted) {
            (true, true) => self.tp += 1.0,
            (false, true) => self.fp += 1.0,
            (true, false) => self.fn_ += 1.0,
            (false, false) => {}
        }
    }

    pub fn from_labels(labels: &[bool], predicted: &[bool]) -> Result<Self> {
        if labels.len() != predicted.len() {
            return Err(EstimateError::LengthMismatch(labels.len(), predicted.len()));
        }
        let mut c = Confusion::default();
        for (&y, &p) in labels.iter().zip(predicted) {
            c.add(y, p);
        }
        Ok(c)
    }

    /// G = tp / (α(tp + fp) + (1 − α)(tp + fn)).
    pub fn fscore(&self, alpha: Alpha) -> Result<f64> {
        let a = alpha.get();
        let denom = a * (self.tp + self.fp) + (1.0 - a) * (self.tp + self.fn_);
        if denom <= 0.0 {
            return Err(EstimateError::DegenerateMetric);
        }
        Ok((self.tp / denom).clamp(0.0, 1.0))
    }
}

/// F-alpha score of hard predictions against ground truth.
pub fn exact_fscore(labels: &[bool], predicted: &[bool], alpha: Alpha) -> Result<f64> {
    Confusion::from_labels(labels, predicted)?.fscore(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn confusion(tp: usize, fp: usize, fn_: usize) -> (Vec<bool>, Vec<bool>) {
        let mut y = Vec::new();
        let mut p = Vec::new();
        y.extend(std::iter::repeat_n(true, tp));
        p.extend(std::iter::repeat_n(true, tp));
        y.extend(std::iter::repeat_n(false, fp));
        p.extend(std::iter::repeat_n(true, fp));
        y.extend(std::iter::repeat_n(true, fn_));
        p.extend(std::iter::repeat_n(false, fn_));
        // a true negative never changes the score
        y.push(false);
        p.push(false);
        (y, p)
    }

    #[test]
    fn perfect_predictions_score_one() {
        let y = [true, false, true, false];
        assert_eq!(exact_fscore(&y, &y, Alpha::F1).unwrap(), 1.0);
    }

    #[test]
    fn precision_of_one_hit_one_miss() {
        let (y, p) = confusion(1, 1, 0);
        assert_eq!(exact_fscore(&y, &p, Alpha::PRECISION).unwrap(), 0.5);
    }

    #[test]
    fn f1_of_two_one_one() {
        let (y, p) = confusion(2, 1, 1);
        let f = exact_fscore(&y, &p, Alpha::F1).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn recall_ignores_false_positives() {
        let (y, p) = confusion(3, 5, 1);
        assert_eq!(exact_fscore(&y, &p, Alpha::RECALL).unwrap(), 0.75);
    }

    #[test]
    fn all_negative_is_degenerate() {
        let y = [false, false];
        assert_eq!(exact_fscore(&y, &y, Alpha::F1), Err(EstimateError::DegenerateMetric));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            exact_fscore(&[true], &[true, false], Alpha::F1),
            Err(EstimateError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn alpha_range_is_enforced() {
        assert!(Alpha::new(1.5).is_err());
        assert!(Alpha::new(-0.1).is_err());
        assert!(serde_json::from_str::<Alpha>("2.0").is_err());
        assert_eq!(serde_json::from_str::<Alpha>("0.25").unwrap().get(), 0.25);
    }
}
