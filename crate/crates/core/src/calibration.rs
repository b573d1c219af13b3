//! Score calibrators: monotone maps from classifier score to an estimate of
//! P(y = 1 | score).
//!
//! Fitting functions return raw calibrators whose outputs live in [0, 1].
//! [`Calibrator::clamp_rescale`] squeezes them into [eps, 1 − eps] so that
//! importance masses built from them never vanish.

use std::sync::Arc;

use crate::error::{EstimateError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibratorKind {
    Isotonic,
    Platt,
    PriorBlend,
    /// Scores used directly as probabilities.
    Identity,
}

#[derive(Debug, Clone)]
enum Curve {
    /// Sorted unique breakpoint scores with their fitted levels.
    Steps { scores: Vec<f64>, values: Vec<f64> },
    /// value(s) = 1 / (1 + exp(a·s + b))
    Sigmoid { a: f64, b: f64 },
    Constant(f64),
    Identity,
    Blend {
        prior: Arc<Calibrator>,
        current: Arc<Calibrator>,
        beta: f64,
    },
}

/// A monotone score-to-probability map.
///
/// The output is `offset + scale · raw(score)`; an unclamped calibrator has
/// offset 0 and scale 1.
#[derive(Debug, Clone)]
pub struct Calibrator {
    kind: CalibratorKind,
    curve: Curve,
    offset: f64,
    scale: f64,
    eps: f64,
}

impl Calibrator {
    fn raw(kind: CalibratorKind, curve: Curve) -> Self {
        Self {
            kind,
            curve,
            offset: 0.0,
            scale: 1.0,
            eps: 0.0,
        }
    }

    /// Uses the score itself as the probability. Scores should already be in [0, 1].
    pub fn identity() -> Self {
        Self::raw(CalibratorKind::Identity, Curve::Identity)
    }

    pub fn constant(kind: CalibratorKind, value: f64) -> Self {
        Self::raw(kind, Curve::Constant(value.clamp(0.0, 1.0)))
    }

    pub fn kind(&self) -> CalibratorKind {
        self.kind
    }

    /// Lower clamp bound; 0 for an unclamped calibrator.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Platt parameters `(a, b)` when this is a sigmoid fit.
    pub fn sigmoid_params(&self) -> Option<(f64, f64)> {
        match self.curve {
            Curve::Sigmoid { a, b } => Some((a, b)),
            _ => None,
        }
    }

    /// Breakpoints `(score, output)` of a step calibrator, empty otherwise.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        match &self.curve {
            Curve::Steps { scores, values } => scores
                .iter()
                .zip(values)
                .map(|(&s, &v)| (s, self.offset + self.scale * v))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn eval(&self, score: f64) -> f64 {
        let raw = match &self.curve {
            Curve::Steps { scores, values } => {
                // nearest breakpoint at or below the query; first level below the range
                let k = scores.partition_point(|&s| s <= score);
                values[k.saturating_sub(1)]
            }
            Curve::Sigmoid { a, b } => sigmoid(-(a * score + b)),
            Curve::Constant(v) => *v,
            Curve::Identity => score.clamp(0.0, 1.0),
            Curve::Blend {
                prior,
                current,
                beta,
            } => beta * prior.eval(score) + (1.0 - beta) * current.eval(score),
        };
        self.offset + self.scale * raw
    }

    pub fn eval_many(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.eval(s)).collect()
    }

    /// Linearly maps the output range [0, 1] onto [eps, 1 − eps].
    pub fn clamp_rescale(mut self, eps: f64) -> Self {
        self.offset = eps + (1.0 - 2.0 * eps) * self.offset;
        self.scale *= 1.0 - 2.0 * eps;
        self.eps = eps;
        self
    }
}

/// Pointwise `beta · prior + (1 − beta) · current`.
pub fn blend_calibrators(prior: Arc<Calibrator>, current: Arc<Calibrator>, beta: f64) -> Result<Calibrator> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(EstimateError::InvalidConfig(format!("beta {beta} outside [0, 1]")));
    }
    if (prior.eps - current.eps).abs() > 1e-15 {
        return Err(EstimateError::InvalidConfig(format!(
            "blended calibrators disagree on eps ({} vs {})",
            prior.eps, current.eps
        )));
    }
    let eps = prior.eps;
    Ok(Calibrator {
        kind: CalibratorKind::PriorBlend,
        curve: Curve::Blend {
            prior,
            current,
            beta,
        },
        offset: 0.0,
        scale: 1.0,
        eps,
    })
}

/// Least-squares nondecreasing step function through `(score, target)` pairs
/// (pool-adjacent-violators). Equal scores are pooled before fitting.
pub fn fit_isotonic(pairs: &[(f64, f64)]) -> Result<Calibrator> {
    if pairs.is_empty() {
        return Err(EstimateError::EmptyInput);
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut scores = Vec::new();
    let mut means = Vec::new();
    let mut weights = Vec::new();
    for &(s, t) in &sorted {
        match scores.last() {
            Some(&last) if last == s => {
                let k = means.len() - 1;
                let w: f64 = weights[k];
                means[k] = (means[k] * w + t) / (w + 1.0);
                weights[k] = w + 1.0;
            }
            _ => {
                scores.push(s);
                means.push(t);
                weights.push(1.0);
            }
        }
    }
    let values = pava(&means, &weights);
    Ok(Calibrator::raw(
        CalibratorKind::Isotonic,
        Curve::Steps { scores, values },
    ))
}

/// Weighted pool-adjacent-violators on an already ordered sequence.
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    // blocks: (mean, weight, len)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((yi, wi, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            if blocks[n - 2].0 <= blocks[n - 1].0 {
                break;
            }
            let (m2, w2, l2) = blocks.pop().unwrap();
            let (m1, w1, l1) = blocks.last_mut().unwrap();
            let wt = *w1 + w2;
            *m1 = (*m1 * *w1 + m2 * w2) / wt;
            *w1 = wt;
            *l1 += l2;
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, len)| std::iter::repeat_n(m, len))
        .collect()
}

/// Two-parameter sigmoid fit by maximum Bernoulli likelihood (Newton's
/// method with backtracking). All-equal targets fall back to a constant.
pub fn fit_platt(pairs: &[(f64, f64)]) -> Result<Calibrator> {
    if pairs.is_empty() {
        return Err(EstimateError::EmptyInput);
    }
    let mean = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
    let first = pairs[0].1;
    if pairs.iter().all(|p| p.1 == first) {
        return Ok(Calibrator::constant(CalibratorKind::Platt, mean));
    }
    let (a, b) = platt_newton(pairs);
    Ok(Calibrator::raw(CalibratorKind::Platt, Curve::Sigmoid { a, b }))
}

const PLATT_MAX_ITER: usize = 100;
const PLATT_GRAD_TOL: f64 = 1e-8;

fn platt_newton(pairs: &[(f64, f64)]) -> (f64, f64) {
    let pos: f64 = pairs.iter().map(|p| p.1).sum();
    let neg = pairs.len() as f64 - pos;
    let mut a = 0.0;
    let mut b = ((neg + 1.0) / (pos + 1.0)).ln();
    let mut nll = platt_nll(pairs, a, b);

    for _ in 0..PLATT_MAX_ITER {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(s, t) in pairs {
            let p = sigmoid(-(a * s + b));
            let d = t - p;
            let h = p * (1.0 - p);
            ga += s * d;
            gb += d;
            haa += s * s * h;
            hab += s * h;
            hbb += h;
        }
        if ga.hypot(gb) < PLATT_GRAD_TOL {
            break;
        }
        haa += 1e-12;
        hbb += 1e-12;
        let det = haa * hbb - hab * hab;
        let (da, db) = if det > 0.0 {
            ((hbb * ga - hab * gb) / det, (haa * gb - hab * ga) / det)
        } else {
            (ga, gb)
        };
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let (na, nb) = (a - step * da, b - step * db);
            let candidate = platt_nll(pairs, na, nb);
            if candidate <= nll {
                a = na;
                b = nb;
                improved = candidate < nll;
                nll = candidate;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

/// Negative log-likelihood of targets under 1 / (1 + exp(a·s + b)).
pub fn platt_nll(pairs: &[(f64, f64)], a: f64, b: f64) -> f64 {
    pairs
        .iter()
        .map(|&(s, t)| {
            let f = a * s + b;
            // log p = -softplus(f), log(1 - p) = f - softplus(f)
            let sp = softplus(f);
            -(t * -sp + (1.0 - t) * (f - sp))
        })
        .sum()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Isotonic fit of scores to the classifier's own hard predictions, clamped.
/// Used before any true labels exist.
pub fn fit_calibration_prior(scores: &[f64], predicted: &[bool], eps: f64) -> Result<Calibrator> {
    if scores.len() != predicted.len() {
        return Err(EstimateError::LengthMismatch(scores.len(), predicted.len()));
    }
    let pairs: Vec<(f64, f64)> = scores
        .iter()
        .zip(predicted)
        .map(|(&s, &p)| (s, f64::from(u8::from(p))))
        .collect();
    Ok(fit_isotonic(&pairs)?.clamp_rescale(eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fitted(c: &Calibrator) -> Vec<f64> {
        c.breakpoints().into_iter().map(|(_, v)| v).collect()
    }

    #[test]
    fn isotonic_keeps_monotone_targets() {
        let c = fit_isotonic(&[(0.1, 0.0), (0.2, 0.0), (0.8, 1.0), (0.9, 1.0)]).unwrap();
        assert_eq!(fitted(&c), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn isotonic_pools_a_violation() {
        let c = fit_isotonic(&[(0.2, 1.0), (0.4, 0.0)]).unwrap();
        assert_eq!(fitted(&c), vec![0.5, 0.5]);
    }

    #[test]
    fn isotonic_single_pair_is_constant() {
        let c = fit_isotonic(&[(0.5, 1.0)]).unwrap();
        for s in [-10.0, 0.0, 0.5, 3.0] {
            assert_eq!(c.eval(s), 1.0);
        }
    }

    #[test]
    fn isotonic_rejects_empty() {
        assert_eq!(fit_isotonic(&[]).unwrap_err(), EstimateError::EmptyInput);
    }

    #[test]
    fn isotonic_averages_ties_before_pooling() {
        let c = fit_isotonic(&[(0.3, 1.0), (0.3, 0.0), (0.3, 0.0), (0.6, 1.0)]).unwrap();
        let bp = c.breakpoints();
        assert_eq!(bp.len(), 2);
        assert!((bp[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(bp[1].1, 1.0);
    }

    #[test]
    fn step_evaluation_uses_breakpoint_at_or_below() {
        let c = fit_isotonic(&[(0.2, 0.1), (0.5, 0.4), (0.7, 0.9)]).unwrap();
        assert_eq!(c.eval(0.0), 0.1);
        assert_eq!(c.eval(0.2), 0.1);
        assert_eq!(c.eval(0.49), 0.1);
        assert_eq!(c.eval(0.5), 0.4);
        assert_eq!(c.eval(0.69), 0.4);
        assert_eq!(c.eval(5.0), 0.9);
    }

    #[test]
    fn clamp_rescale_endpoints() {
        let zero = Calibrator::constant(CalibratorKind::Isotonic, 0.0).clamp_rescale(1e-4);
        let one = Calibrator::constant(CalibratorKind::Isotonic, 1.0).clamp_rescale(1e-4);
        let half = Calibrator::constant(CalibratorKind::Isotonic, 0.5).clamp_rescale(0.3);
        assert!((zero.eval(0.0) - 1e-4).abs() < 1e-18);
        assert!((one.eval(0.0) - (1.0 - 1e-4)).abs() < 1e-15);
        assert_eq!(half.eval(0.0), 0.5);
    }

    #[test]
    fn blend_is_pointwise_convex() {
        let c0 = Arc::new(Calibrator::constant(CalibratorKind::Isotonic, 0.2));
        let ci = Arc::new(Calibrator::constant(CalibratorKind::Isotonic, 0.6));
        let b = blend_calibrators(c0.clone(), ci.clone(), 0.5).unwrap();
        assert!((b.eval(0.3) - 0.4).abs() < 1e-15);
        let b1 = blend_calibrators(c0.clone(), ci.clone(), 1.0).unwrap();
        let b0 = blend_calibrators(c0, ci, 0.0).unwrap();
        assert_eq!(b1.eval(0.9), 0.2);
        assert_eq!(b0.eval(0.9), 0.6);
    }

    #[test]
    fn blend_requires_shared_eps() {
        let c0 = Arc::new(Calibrator::constant(CalibratorKind::Isotonic, 0.2).clamp_rescale(1e-3));
        let ci = Arc::new(Calibrator::constant(CalibratorKind::Isotonic, 0.6).clamp_rescale(1e-4));
        assert!(blend_calibrators(c0, ci, 0.5).is_err());
    }

    #[test]
    fn prior_follows_threshold_predictions() {
        let scores: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let predicted: Vec<bool> = scores.iter().map(|&s| s > 0.6).collect();
        let prior = fit_calibration_prior(&scores, &predicted, 1e-4).unwrap();
        assert!((prior.eval(0.3) - 1e-4).abs() < 1e-15);
        assert!((prior.eval(0.9) - (1.0 - 1e-4)).abs() < 1e-15);
    }

    #[test]
    fn prior_of_all_negative_pool_is_eps() {
        let scores = [0.1, 0.5, 0.9];
        let prior = fit_calibration_prior(&scores, &[false; 3], 1e-4).unwrap();
        for s in scores {
            assert!((prior.eval(s) - 1e-4).abs() < 1e-18);
        }
    }

    #[test]
    fn platt_constant_fallback() {
        let c = fit_platt(&[(0.1, 1.0), (0.5, 1.0), (0.9, 1.0)]).unwrap().clamp_rescale(1e-4);
        assert!((c.eval(0.3) - (1.0 - 1e-4)).abs() < 1e-15);
    }

    #[test]
    fn platt_symmetric_pairs_hit_midpoint() {
        let c = fit_platt(&[(-1.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!((c.eval(0.0) - 0.5).abs() < 1e-9);
        assert!(c.eval(1.0) > c.eval(-1.0));
    }

    proptest! {
        #[test]
        fn isotonic_is_monotone_on_grid(
            pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60),
            eps in 1e-6f64..0.2,
        ) {
            let c = fit_isotonic(&pairs).unwrap().clamp_rescale(eps);
            let mut prev = f64::NEG_INFINITY;
            for k in 0..1000 {
                let v = c.eval(-0.1 + 1.2 * k as f64 / 999.0);
                prop_assert!(v >= prev);
                prop_assert!(v >= eps - 1e-15 && v <= 1.0 - eps + 1e-15);
                prev = v;
            }
        }
    }
}
