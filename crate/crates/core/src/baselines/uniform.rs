//! Methods built on a uniform random sample without replacement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calibration::{fit_isotonic, fit_platt};
use crate::error::{EstimateError, Result};
use crate::fscore::{Alpha, Confusion};
use crate::pool::ScoredPool;

use super::{check_budget, plug_in_subset, BaselineResult, Method};

fn uniform_labels(n: usize, budget: usize, oracle: &[bool], seed: u64) -> Vec<(usize, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, n, budget)
        .into_iter()
        .map(|i| (i, oracle[i]))
        .collect()
}

/// Plug-in F-score on a uniform sample.
pub fn rand_estimate(pool: &ScoredPool, oracle: &[bool], budget: usize, alpha: Alpha, seed: u64) -> Result<BaselineResult> {
    check_budget(pool, budget)?;
    let labeled = uniform_labels(pool.len(), budget, oracle, seed);
    let g = plug_in_subset(pool, &labeled, alpha)?;
    Ok(BaselineResult::new(Method::Rand, budget, g, labeled))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferKind {
    Isotonic,
    Platt,
}

/// Calibrates on a uniform sample, then counts expected tp/fp/fn over the
/// whole pool (true labels where known, calibrated probabilities elsewhere).
pub fn calibrate_infer_estimate(
    pool: &ScoredPool,
    oracle: &[bool],
    budget: usize,
    alpha: Alpha,
    kind: InferKind,
    eps: f64,
    seed: u64,
) -> Result<BaselineResult> {
    if budget < 2 {
        return Err(EstimateError::BudgetTooSmall { needed: 2, got: budget });
    }
    check_budget(pool, budget)?;
    let labeled = uniform_labels(pool.len(), budget, oracle, seed);
    let xs = pool.normalized_scores();
    let pairs: Vec<(f64, f64)> = labeled.iter().map(|&(i, y)| (xs[i], f64::from(u8::from(y)))).collect();
    let calibrator = match kind {
        InferKind::Isotonic => fit_isotonic(&pairs)?,
        InferKind::Platt => fit_platt(&pairs)?,
    }
    .clamp_rescale(eps);

    let mut known: Vec<Option<bool>> = vec![None; pool.len()];
    for &(i, y) in &labeled {
        known[i] = Some(y);
    }
    let mut c = Confusion::default();
    for (i, item) in pool.items().iter().enumerate() {
        match known[i] {
            Some(y) => c.add(y, item.predicted),
            None => {
                let p = calibrator.eval(xs[i]);
                if item.predicted {
                    c.tp += p;
                    c.fp += 1.0 - p;
                } else {
                    c.fn_ += p;
                }
            }
        }
    }
    let method = match kind {
        InferKind::Isotonic => Method::Iso,
        InferKind::Platt => Method::Platt,
    };
    Ok(BaselineResult::new(method, budget, c.fscore(alpha)?, labeled))
}
