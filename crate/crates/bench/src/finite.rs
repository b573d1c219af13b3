//! Sampling variance of the exact F-score on finite random subsets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lowshot_core::{exact_fscore, Alpha, EstimateError, ScoredPool};

use crate::error::{BenchError, Result};
use crate::trials::trial_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteVarianceRow {
    pub size: usize,
    /// Subsets on which the F-score was defined.
    pub trials: usize,
    pub mean: f64,
    /// Sample variance (n − 1) of the subset F-scores.
    pub variance: f64,
    /// Monte-Carlo standard error of `variance`.
    pub variance_se: f64,
    /// Delta-method approximation with finite-population correction.
    pub analytic: f64,
}

/// For each size, the spread of exact F_α over `trials` uniform subsets
/// drawn without replacement.
pub fn finite_dataset_variance(
    pool: &ScoredPool,
    subset_sizes: &[usize],
    trials: usize,
    alpha: Alpha,
    seed: u64,
) -> Result<Vec<FiniteVarianceRow>> {
    if trials < 2 {
        return Err(BenchError::InvalidConfig("need at least 2 trials".into()));
    }
    let labels = pool.oracle_labels()?;
    let predicted = pool.predicted();
    subset_sizes
        .iter()
        .map(|&size| {
            if size == 0 || size > pool.len() {
                return Err(BenchError::InvalidConfig(format!(
                    "subset size {size} outside 1..={}",
                    pool.len()
                )));
            }
            let values: Vec<f64> = (0..trials)
                .into_par_iter()
                .filter_map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, size, t));
                    let idx = rand::seq::index::sample(&mut rng, pool.len(), size);
                    let y: Vec<bool> = idx.iter().map(|i| labels[i]).collect();
                    let p: Vec<bool> = idx.iter().map(|i| predicted[i]).collect();
                    match exact_fscore(&y, &p, alpha) {
                        Ok(g) => Some(g),
                        Err(EstimateError::DegenerateMetric) => None,
                        Err(e) => unreachable!("subset labels are well formed: {e}"),
                    }
                })
                .collect();
            let (mean, variance, variance_se) = moments(&values);
            Ok(FiniteVarianceRow {
                size,
                trials: values.len(),
                mean,
                variance,
                variance_se,
                analytic: analytic_subset_variance(&labels, &predicted, size, alpha)?,
            })
        })
        .collect()
}

/// Mean, unbiased variance, and the standard error of that variance from
/// the fourth central moment.
fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (xs.first().copied().unwrap_or(f64::NAN), f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let s2 = m2 * n / (n - 1.0);
    let var_s2 = ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n).max(0.0);
    (mean, s2, var_s2.sqrt())
}

/// Var(F̂) ≈ (N − m)/(N − 1) · Var(u − G·d) / (m · E[d]²), where per item
/// u = tp and d = α(tp + fp) + (1 − α)(tp + fn), moments taken over the pool.
pub fn analytic_subset_variance(labels: &[bool], predicted: &[bool], size: usize, alpha: Alpha) -> Result<f64> {
    let g = exact_fscore(labels, predicted, alpha)?;
    let a = alpha.get();
    let n = labels.len() as f64;
    let (mut sum_d, mut sum_z, mut sum_z2) = (0.0, 0.0, 0.0);
    for (&y, &p) in labels.iter().zip(predicted) {
        let u = f64::from(u8::from(y && p));
        let d = a * f64::from(u8::from(p)) + (1.0 - a) * f64::from(u8::from(y));
        let z = u - g * d;
        sum_d += d;
        sum_z += z;
        sum_z2 += z * z;
    }
    let mean_d = sum_d / n;
    let var_z = sum_z2 / n - (sum_z / n).powi(2);
    let m = size as f64;
    let fpc = if labels.len() > 1 { (n - m) / (n - 1.0) } else { 0.0 };
    Ok(fpc * var_z / (m * mean_d * mean_d))
}
