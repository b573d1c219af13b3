//! The importance-weighted F-score ratio estimator and its variance.

use serde::{Deserialize, Serialize};

use crate::error::{EstimateError, Result};
use crate::fscore::Alpha;
use crate::pool::ScoredPool;
use crate::sampling::SamplingPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Drawn from this iteration's proposal.
    Fresh,
    /// Labeled in an earlier iteration and folded back in.
    Reused,
}

/// A labeled draw with its importance weight `w = p(x)/q(x) · v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDraw {
    pub index: usize,
    pub label: bool,
    pub predicted: bool,
    /// p(x) / q(x) for this draw; kept so the draw can be re-weighted
    /// against another model's predictions.
    pub density_ratio: f64,
    pub weight: f64,
    /// 1 when the prediction matches the label.
    pub correct: bool,
    pub provenance: Provenance,
}

impl LabeledDraw {
    pub fn new(
        index: usize,
        label: bool,
        predicted: bool,
        density_ratio: f64,
        alpha: Alpha,
        provenance: Provenance,
    ) -> Self {
        Self {
            index,
            label,
            predicted,
            density_ratio,
            weight: density_ratio * alpha.relevance(label, predicted),
            correct: label == predicted,
            provenance,
        }
    }

    /// The same draw scored against a different prediction.
    pub fn repredict(&self, predicted: bool, alpha: Alpha) -> Self {
        Self::new(self.index, self.label, predicted, self.density_ratio, alpha, self.provenance)
    }
}

/// Turns sampled indices into weighted draws.
pub fn make_draws<F>(
    indices: &[usize],
    plan: &SamplingPlan,
    pool: &ScoredPool,
    labels: F,
    alpha: Alpha,
) -> Result<Vec<LabeledDraw>>
where
    F: Fn(usize) -> Option<bool>,
{
    let density = plan.population_density();
    let dense = plan.dense();
    indices
        .iter()
        .map(|&i| {
            let label = labels(i).ok_or(EstimateError::MissingLabel(i))?;
            let mass = dense[i];
            if mass <= 0.0 {
                return Err(EstimateError::InvalidConfig(format!(
                    "index {i} lies outside the plan's support"
                )));
            }
            Ok(LabeledDraw::new(
                i,
                label,
                pool.item(i).predicted,
                density / mass,
                alpha,
                Provenance::Fresh,
            ))
        })
        .collect()
}

/// Previously labeled items re-enter with density ratio |L| / |X|.
pub fn reuse_draws(prior_labeled: &[(usize, bool)], pool: &ScoredPool, alpha: Alpha) -> Vec<LabeledDraw> {
    let ratio = prior_labeled.len() as f64 / pool.len() as f64;
    prior_labeled
        .iter()
        .map(|&(i, y)| LabeledDraw::new(i, y, pool.item(i).predicted, ratio, alpha, Provenance::Reused))
        .collect()
}

/// Σ w·ℓ / Σ w.
pub fn is_fscore(draws: &[LabeledDraw]) -> Result<f64> {
    let (num, den) = draws.iter().fold((0.0, 0.0), |(n, d), dr| {
        (n + if dr.correct { dr.weight } else { 0.0 }, d + dr.weight)
    });
    if den <= 0.0 {
        return Err(EstimateError::ZeroWeightMass);
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Variance estimates for one batch of draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    /// Estimate of the asymptotic variance of √n (Ĝ − G).
    pub asymptotic: f64,
    /// Variance of Ĝ itself: `asymptotic / n`.
    pub estimate: f64,
}

const MIN_BESSEL_FACTOR: f64 = 1e-12;

/// Delta-method variance of the ratio estimator with the weight-dependent
/// Bessel-style correction `C = 1 − Σw² / (Σw)²`. `n` counts every draw,
/// zero-weight ones included.
pub fn variance_estimate(draws: &[LabeledDraw], g_hat: f64) -> Result<VarianceEstimate> {
    let n = draws.len();
    if n < 2 {
        return Err(EstimateError::InsufficientDraws(n));
    }
    let (mut sw, mut sw2, mut num) = (0.0, 0.0, 0.0);
    for d in draws {
        let l = if d.correct { 1.0 } else { 0.0 };
        sw += d.weight;
        sw2 += d.weight * d.weight;
        num += d.weight * d.weight * (l - g_hat) * (l - g_hat);
    }
    if sw <= 0.0 {
        return Err(EstimateError::ZeroWeightMass);
    }
    let c = 1.0 - sw2 / (sw * sw);
    if c <= MIN_BESSEL_FACTOR {
        return Err(EstimateError::DegenerateWeights(c));
    }
    let nf = n as f64;
    let asymptotic = num / c / (sw * sw / nf);
    Ok(VarianceEstimate {
        asymptotic,
        estimate: asymptotic / nf,
    })
}

/// Everything one estimation iteration produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Fresh labels acquired in this iteration.
    pub batch_size: usize,
    pub draws: Vec<LabeledDraw>,
    pub g_hat: f64,
    /// `None` when the weights are too degenerate for a variance estimate.
    pub asymptotic_var: Option<f64>,
    pub estimate_var: Option<f64>,
    pub weight_mass: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl IterationRecord {
    /// Scores `draws`, keeping `g_fallback` when they carry no weight.
    pub fn from_draws(iteration: usize, batch_size: usize, draws: Vec<LabeledDraw>, g_fallback: f64) -> Self {
        let mut warnings = Vec::new();
        let g_hat = match is_fscore(&draws) {
            Ok(g) => g,
            Err(e) => {
                warnings.push(format!("{e}; keeping previous estimate"));
                g_fallback
            }
        };
        let (asymptotic_var, estimate_var) = match variance_estimate(&draws, g_hat) {
            Ok(v) => (Some(v.asymptotic), Some(v.estimate)),
            Err(e) => {
                warnings.push(format!("variance unavailable: {e}"));
                (None, None)
            }
        };
        let weight_mass = draws.iter().map(|d| d.weight).sum();
        Self {
            iteration,
            batch_size,
            draws,
            g_hat,
            asymptotic_var,
            estimate_var,
            weight_mass,
            warnings,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedEstimate {
    pub g: f64,
    pub var: Option<f64>,
}

/// Weight-mass-weighted mean of the last `window` iteration estimates, with
/// variance `Σ (m_i / Σm)² · var_i` (iterations treated as uncorrelated).
///
/// Records without a variance estimate are left out of the variance sum and
/// the remaining weights renormalized.
pub fn combine_estimates(records: &[IterationRecord], window: usize) -> Result<CombinedEstimate> {
    let last = records.last().ok_or(EstimateError::EmptyInput)?;
    let window = window.max(1).min(records.len());
    let tail = &records[records.len() - window..];

    let total: f64 = tail.iter().map(|r| r.weight_mass).sum();
    if total <= 0.0 {
        return Ok(CombinedEstimate {
            g: last.g_hat,
            var: last.estimate_var,
        });
    }
    let g = tail.iter().map(|r| r.g_hat * r.weight_mass).sum::<f64>() / total;

    let with_var: Vec<(f64, f64)> = tail
        .iter()
        .filter_map(|r| r.estimate_var.map(|v| (r.weight_mass, v)))
        .collect();
    let var_total: f64 = with_var.iter().map(|(m, _)| m).sum();
    let var = if var_total > 0.0 {
        Some(with_var.iter().map(|(m, v)| (m / var_total).powi(2) * v).sum())
    } else {
        with_var.last().map(|&(_, v)| v)
    };
    Ok(CombinedEstimate {
        g: g.clamp(0.0, 1.0),
        var,
    })
}

/// Perfectly-correlated combination `(Σ (m_i / Σm) · sd_i)²` over the same window.
pub fn combine_worst_case_variance(records: &[IterationRecord], window: usize) -> Option<f64> {
    let window = window.max(1).min(records.len());
    let tail = &records[records.len() - window..];
    let with_var: Vec<(f64, f64)> = tail
        .iter()
        .filter_map(|r| r.estimate_var.map(|v| (r.weight_mass, v)))
        .collect();
    let total: f64 = with_var.iter().map(|(m, _)| m).sum();
    if total <= 0.0 {
        return with_var.last().map(|&(_, v)| v);
    }
    Some(with_var.iter().map(|(m, v)| m / total * v.sqrt()).sum::<f64>().powi(2))
}
