//! Two-component 1-D Gaussian mixture fitted to the score distribution.

use std::f64::consts::PI;

use crate::error::{EstimateError, Result};
use crate::fscore::{Alpha, Confusion};
use crate::pool::ScoredPool;
use crate::sampling::rank_by_score;

use super::{check_budget, BaselineResult, Method};

const VAR_FLOOR: f64 = 1e-6;
const MAX_ITER: usize = 500;
const LL_TOL: f64 = 1e-9;

/// Component 0 models negatives, component 1 positives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmInit {
    pub weight_pos: f64,
    pub means: [f64; 2],
    pub vars: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub vars: [f64; 2],
    /// Total log-likelihood before each EM update and after the last one.
    pub log_likelihood: Vec<f64>,
}

impl GaussianMixture {
    /// Posterior probability of the positive component.
    pub fn posterior_pos(&self, x: f64) -> f64 {
        let l0 = self.weights[0].ln() + log_normal(x, self.means[0], self.vars[0]);
        let l1 = self.weights[1].ln() + log_normal(x, self.means[1], self.vars[1]);
        1.0 / (1.0 + (l0 - l1).exp())
    }
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean).powi(2) / var)
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

/// Expectation-maximization from a fixed starting point.
pub fn fit_gmm_1d(xs: &[f64], init: GmmInit) -> GaussianMixture {
    let mut weights = [1.0 - init.weight_pos, init.weight_pos];
    let mut means = init.means;
    let mut vars = init.vars.map(|v| v.max(VAR_FLOOR));
    let mut trace: Vec<f64> = Vec::new();
    let mut resp = vec![0.0; xs.len()];

    for _ in 0..MAX_ITER {
        // E-step
        let mut ll = 0.0;
        for (r, &x) in resp.iter_mut().zip(xs) {
            let l0 = weights[0].ln() + log_normal(x, means[0], vars[0]);
            let l1 = weights[1].ln() + log_normal(x, means[1], vars[1]);
            let lse = log_sum_exp(l0, l1);
            ll += lse;
            *r = (l1 - lse).exp();
        }
        if let Some(&prev) = trace.last() {
            if (ll - prev).abs() < LL_TOL {
                trace.push(ll);
                break;
            }
        }
        trace.push(ll);

        // M-step
        let n1: f64 = resp.iter().sum();
        let n0 = xs.len() as f64 - n1;
        if n0 <= 0.0 || n1 <= 0.0 {
            break;
        }
        let m1 = resp.iter().zip(xs).map(|(r, x)| r * x).sum::<f64>() / n1;
        let m0 = resp.iter().zip(xs).map(|(r, x)| (1.0 - r) * x).sum::<f64>() / n0;
        let v1 = resp.iter().zip(xs).map(|(r, x)| r * (x - m1).powi(2)).sum::<f64>() / n1;
        let v0 = resp.iter().zip(xs).map(|(r, x)| (1.0 - r) * (x - m0).powi(2)).sum::<f64>() / n0;
        let n = xs.len() as f64;
        weights = [n0 / n, n1 / n];
        means = [m0, m1];
        vars = [v0.max(VAR_FLOOR), v1.max(VAR_FLOOR)];
    }
    GaussianMixture {
        weights,
        means,
        vars,
        log_likelihood: trace,
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Labels the top `budget` items, fits the mixture to all scores starting
/// from the labeled class statistics, and infers labels elsewhere.
pub fn gmm_estimate(pool: &ScoredPool, oracle: &[bool], budget: usize, alpha: Alpha) -> Result<BaselineResult> {
    if budget < 2 {
        return Err(EstimateError::BudgetTooSmall { needed: 2, got: budget });
    }
    check_budget(pool, budget)?;
    let xs = pool.normalized_scores();
    let ranking = rank_by_score(&xs);
    let labeled: Vec<(usize, bool)> = ranking[..budget].iter().map(|&i| (i, oracle[i])).collect();

    let (_, global_var) = mean_var(&xs);
    let global_var = global_var.max(VAR_FLOOR);
    let class_stats = |want: bool| -> Option<(f64, f64)> {
        let v: Vec<f64> = labeled.iter().filter(|&&(_, y)| y == want).map(|&(i, _)| xs[i]).collect();
        match v.len() {
            0 => None,
            1 => Some((v[0], global_var)),
            _ => {
                let (m, var) = mean_var(&v);
                Some((m, var.max(VAR_FLOOR)))
            }
        }
    };
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (m1, v1) = class_stats(true).unwrap_or((hi, global_var));
    let (m0, v0) = class_stats(false).unwrap_or((lo, global_var));
    let n = xs.len() as f64;
    let n_pos_labeled = labeled.iter().filter(|&&(_, y)| y).count() as f64;
    let init = GmmInit {
        weight_pos: (n_pos_labeled / n).clamp(1.0 / n, 0.5),
        means: [m0, m1],
        vars: [v0, v1],
    };
    let mut fit = fit_gmm_1d(&xs, init);
    if fit.means[1] < fit.means[0] {
        fit.weights.swap(0, 1);
        fit.means.swap(0, 1);
        fit.vars.swap(0, 1);
    }

    let mut known: Vec<Option<bool>> = vec![None; pool.len()];
    for &(i, y) in &labeled {
        known[i] = Some(y);
    }
    let mut c = Confusion::default();
    for (i, item) in pool.items().iter().enumerate() {
        let y = known[i].unwrap_or_else(|| fit.posterior_pos(xs[i]) > 0.5);
        c.add(y, item.predicted);
    }
    Ok(BaselineResult::new(Method::Gmm, budget, c.fscore(alpha)?, labeled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fscore::exact_fscore;

    #[test]
    fn separated_clusters_recover_exact_labels() {
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            scores.push(0.1 + 0.0005 * i as f64);
            labels.push(false);
        }
        for i in 0..20 {
            scores.push(0.9 + 0.001 * i as f64);
            labels.push(true);
        }
        let predicted: Vec<bool> = scores.iter().map(|&s| s > 0.5).collect();
        let pool = ScoredPool::from_parts(&scores, &predicted, None).unwrap();
        let r = gmm_estimate(&pool, &labels, 25, Alpha::F1).unwrap();
        assert_eq!(r.g_hat, exact_fscore(&labels, &predicted, Alpha::F1).unwrap());
    }

    #[test]
    fn single_class_labels_use_fallback_start() {
        let scores: Vec<f64> = (0..100).map(|i| (i as f64 / 100.0).powi(2)).collect();
        let predicted: Vec<bool> = scores.iter().map(|&s| s > 0.8).collect();
        let labels = vec![true; 100];
        let pool = ScoredPool::from_parts(&scores, &predicted, None).unwrap();
        let r = gmm_estimate(&pool, &labels, 5, Alpha::F1).unwrap();
        assert!(r.g_hat.is_finite() && (0.0..=1.0).contains(&r.g_hat));
    }

    #[test]
    fn budget_must_cover_two_items() {
        let pool = ScoredPool::from_parts(&[0.1, 0.9], &[false, true], None).unwrap();
        assert!(gmm_estimate(&pool, &[false, true], 1, Alpha::F1).is_err());
    }
}
