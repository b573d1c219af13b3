//! Importance distributions over the pool and draws from them.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{EstimateError, Result};
use crate::fscore::Alpha;
use crate::pool::ScoredPool;

/// A normalized proposal over a subset (the domain) of pool indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    domain: Vec<usize>,
    mass: Vec<f64>,
    pool_size: usize,
}

impl SamplingPlan {
    /// Normalizes nonnegative masses aligned with `domain`.
    pub fn from_masses(domain: Vec<usize>, raw: Vec<f64>, pool_size: usize) -> Result<Self> {
        if domain.is_empty() {
            return Err(EstimateError::EmptyInput);
        }
        debug_assert_eq!(domain.len(), raw.len());
        let total: f64 = raw.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(EstimateError::AllZeroMass);
        }
        let mass = raw.into_iter().map(|m| m / total).collect();
        Ok(Self {
            domain,
            mass,
            pool_size,
        })
    }

    pub fn uniform(domain: Vec<usize>, pool_size: usize) -> Result<Self> {
        let raw = vec![1.0; domain.len()];
        Self::from_masses(domain, raw, pool_size)
    }

    pub fn domain(&self) -> &[usize] {
        &self.domain
    }

    /// Masses aligned with [`SamplingPlan::domain`].
    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    /// Uniform population density p(x) = 1 / |pool|.
    pub fn population_density(&self) -> f64 {
        1.0 / self.pool_size as f64
    }

    /// Dense per-pool-index mass; zero outside the domain.
    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.pool_size];
        for (&i, &m) in self.domain.iter().zip(&self.mass) {
            out[i] = m;
        }
        out
    }

    pub fn sampler(&self) -> PlanSampler<'_> {
        let table = WeightedAliasIndex::new(self.mass.clone())
            .expect("normalized masses form a valid alias table");
        PlanSampler { plan: self, table }
    }
}

/// Alias-table sampler over a plan's domain, O(1) per draw.
pub struct PlanSampler<'a> {
    plan: &'a SamplingPlan,
    table: WeightedAliasIndex<f64>,
}

impl PlanSampler<'_> {
    /// One draw: `(pool index, mass of that index)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let k = self.table.sample(rng);
        (self.plan.domain[k], self.plan.mass[k])
    }
}

/// `n_draws` i.i.d. draws with replacement; duplicates are kept.
pub fn weighted_sample<R: Rng + ?Sized>(plan: &SamplingPlan, n_draws: usize, rng: &mut R) -> Vec<usize> {
    let sampler = plan.sampler();
    (0..n_draws).map(|_| sampler.draw(rng).0).collect()
}

/// Pool indices ordered by descending score, ties by item order.
pub fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Size of the adaptive top-K domain at 0-based iteration `iteration_index`.
pub fn domain_size(pool_size: usize, n_pos: usize, iteration_index: usize, multiplier: usize) -> usize {
    if n_pos == 0 {
        return pool_size;
    }
    multiplier
        .saturating_mul(iteration_index + 1)
        .saturating_mul(n_pos)
        .min(pool_size)
}

/// The `multiplier · (iteration_index + 1) · n_pos` highest-scored indices,
/// where `n_pos` counts predicted positives. Falls back to the whole pool
/// when nothing is predicted positive.
pub fn restrict_domain(pool: &ScoredPool, iteration_index: usize, multiplier: usize) -> Vec<usize> {
    let ranking = rank_by_score(&pool.scores());
    let k = domain_size(pool.len(), pool.positive_predictions(), iteration_index, multiplier);
    ranking[..k].to_vec()
}

/// Unnormalized variance-optimal mass for one item given its calibrated
/// probability `c` and the current F-score guess `g`.
pub fn optimal_mass(c: f64, predicted: bool, g: f64, alpha: Alpha, density: f64) -> f64 {
    let a = alpha.get();
    if predicted {
        density * (c * (1.0 - g).powi(2) + a * a * (1.0 - c) * g * g).sqrt()
    } else {
        density * (1.0 - a) * (c * g * g).sqrt()
    }
}

/// Plugs calibrated probabilities and the previous estimate into the
/// variance-minimizing proposal and normalizes it over `domain`.
///
/// `probs` and `predicted` are indexed by pool index.
pub fn importance_distribution(
    probs: &[f64],
    predicted: &[bool],
    g_prev: f64,
    alpha: Alpha,
    domain: &[usize],
    pool_size: usize,
) -> Result<SamplingPlan> {
    if domain.is_empty() {
        return Err(EstimateError::EmptyInput);
    }
    let density = 1.0 / pool_size as f64;
    let raw = domain
        .iter()
        .map(|&i| optimal_mass(probs[i], predicted[i], g_prev, alpha, density))
        .collect();
    SamplingPlan::from_masses(domain.to_vec(), raw, pool_size)
}
