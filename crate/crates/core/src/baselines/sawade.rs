//! One-shot importance sampling with raw scores taken as probabilities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acis::draw_distinct;
use crate::calibration::Calibrator;
use crate::error::Result;
use crate::estimator::{IterationRecord, LabeledDraw, Provenance};
use crate::fscore::{Alpha, Confusion};
use crate::pool::ScoredPool;
use crate::sampling::{importance_distribution, SamplingPlan};

use super::{BaselineResult, Method};

/// Clamped min-max scores, used directly as P(y = 1 | x).
fn score_probs(pool: &ScoredPool, eps: f64) -> Vec<f64> {
    Calibrator::identity().clamp_rescale(eps).eval_many(&pool.normalized_scores())
}

/// Expected-count F-score guess computed from the scores alone.
pub fn sawade_guess(probs: &[f64], predicted: &[bool], alpha: Alpha) -> f64 {
    let mut c = Confusion::default();
    for (&s, &p) in probs.iter().zip(predicted) {
        if p {
            c.tp += s;
            c.fp += 1.0 - s;
        } else {
            c.fn_ += s;
        }
    }
    c.fscore(alpha).unwrap_or(0.5)
}

/// The variance-optimal proposal under the assumption that scores are calibrated.
pub fn sawade_plan(pool: &ScoredPool, alpha: Alpha, eps: f64) -> Result<SamplingPlan> {
    let probs = score_probs(pool, eps);
    let predicted = pool.predicted();
    let g = sawade_guess(&probs, &predicted, alpha);
    let domain: Vec<usize> = (0..pool.len()).collect();
    importance_distribution(&probs, &predicted, g, alpha, &domain, pool.len())
}

pub fn sawade_estimate(
    pool: &ScoredPool,
    oracle: &[bool],
    budget: usize,
    alpha: Alpha,
    eps: f64,
    seed: u64,
) -> Result<BaselineResult> {
    let plan = sawade_plan(pool, alpha, eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let available = plan.masses().iter().filter(|&&m| m > 0.0).count();
    let need = budget.min(available);
    let (draws, fresh) = draw_distinct(&plan, need, 100_000 + 200 * need, &mut rng, |_| false);
    let density = plan.population_density();
    let draws: Vec<LabeledDraw> = draws
        .into_iter()
        .map(|(i, m)| LabeledDraw::new(i, oracle[i], pool.item(i).predicted, density / m, alpha, Provenance::Fresh))
        .collect();
    let record = IterationRecord::from_draws(1, fresh.len(), draws, 0.5);
    let labeled = fresh.into_iter().map(|i| (i, oracle[i])).collect();
    let mut result = BaselineResult::new(Method::Sawade, budget, record.g_hat, labeled);
    result.variance = record.estimate_var;
    Ok(result)
}
