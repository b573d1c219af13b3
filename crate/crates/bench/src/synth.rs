//! Beta-mixture score models with a controllable monotone miscalibration.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use lowshot_core::{PoolItem, ScoredPool};

use crate::error::{BenchError, Result};

const MAX_RESEEDS: usize = 100;

/// Monotone score warp applied in logit space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warp {
    Identity,
    /// logit ↦ k · logit: pushes scores toward 0 and 1.
    Sharpen(f64),
    /// logit ↦ logit / k: pulls scores toward 0.5.
    Flatten(f64),
}

impl Warp {
    pub fn apply(self, s: f64) -> f64 {
        let k = match self {
            Warp::Identity => return s,
            Warp::Sharpen(k) => k,
            Warp::Flatten(k) => 1.0 / k,
        };
        let s = s.clamp(1e-12, 1.0 - 1e-12);
        let logit = (s / (1.0 - s)).ln();
        1.0 / (1.0 + (-k * logit).exp())
    }

    fn validate(self) -> Result<()> {
        match self {
            Warp::Sharpen(k) | Warp::Flatten(k) if !(k.is_finite() && k > 0.0) => {
                Err(BenchError::InvalidConfig(format!("warp factor must be positive, got {k}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub pool_size: usize,
    pub prevalence: f64,
    /// Beta(a, b) for positive-class scores.
    pub pos_score_dist: (f64, f64),
    pub neg_score_dist: (f64, f64),
    pub miscalibration: Warp,
    /// predicted = warped score > threshold
    pub threshold: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// The desk-scale rare-category benchmark pool.
    fn default() -> Self {
        Self {
            pool_size: 20_000,
            prevalence: 0.005,
            pos_score_dist: (5.0, 2.0),
            neg_score_dist: (1.0, 8.0),
            miscalibration: Warp::Sharpen(2.0),
            threshold: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Softmax-like scores: negatives pressed toward 0 with a confusable
    /// tail, so thresholds between 0.02 and 0.5 give closely related models.
    pub fn threshold_family() -> Self {
        Self {
            pos_score_dist: (2.0, 2.0),
            neg_score_dist: (1.0, 15.0),
            miscalibration: Warp::Sharpen(6.0),
            threshold: 0.1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::InvalidConfig(m));
        if self.pool_size == 0 {
            return bad("pool_size must be positive".into());
        }
        if !(self.prevalence > 0.0 && self.prevalence <= 1.0) {
            return bad(format!("prevalence must lie in (0, 1], got {}", self.prevalence));
        }
        for (name, (a, b)) in [("pos_score_dist", self.pos_score_dist), ("neg_score_dist", self.neg_score_dist)] {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return bad(format!("{name} parameters must be positive, got ({a}, {b})"));
            }
        }
        if !self.threshold.is_finite() {
            return bad("threshold must be finite".into());
        }
        self.miscalibration.validate()
    }
}

/// Draws a pool with hidden labels. Seeds that yield no positive or no
/// predicted positive are skipped (seed, seed + 1, ...).
pub fn synth_generate(cfg: &SynthConfig) -> Result<ScoredPool> {
    cfg.validate()?;
    let pos = Beta::new(cfg.pos_score_dist.0, cfg.pos_score_dist.1).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
    let neg = Beta::new(cfg.neg_score_dist.0, cfg.neg_score_dist.1).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;

    for attempt in 0..MAX_RESEEDS {
        let seed = cfg.seed.wrapping_add(attempt as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut any_pos = false;
        let mut any_pred = false;
        let items: Vec<PoolItem> = (0..cfg.pool_size)
            .map(|i| {
                let y = rng.random::<f64>() < cfg.prevalence;
                let raw = if y { pos.sample(&mut rng) } else { neg.sample(&mut rng) };
                let s = cfg.miscalibration.apply(raw);
                let predicted = s > cfg.threshold;
                any_pos |= y;
                any_pred |= predicted;
                PoolItem::new(i.to_string(), s, predicted).with_label(y)
            })
            .collect();
        if any_pos && any_pred {
            if attempt > 0 {
                debug!("synthetic pool regenerated {attempt} times; used seed {seed}");
            }
            return Ok(ScoredPool::new(items)?);
        }
    }
    Err(BenchError::RegenerationLimit {
        seed: cfg.seed,
        attempts: MAX_RESEEDS,
    })
}

/// Re-thresholds a pool's (already warped) scores.
pub fn threshold_model(pool: &ScoredPool, threshold: f64) -> Result<ScoredPool> {
    let predicted: Vec<bool> = pool.items().iter().map(|it| it.score > threshold).collect();
    Ok(pool.with_predictions(&predicted)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warps_are_monotone_and_fix_the_midpoint() {
        for w in [Warp::Identity, Warp::Sharpen(3.0), Warp::Flatten(2.0)] {
            assert!((w.apply(0.5) - 0.5).abs() < 1e-12);
            let ys: Vec<f64> = (1..100).map(|i| w.apply(i as f64 / 100.0)).collect();
            assert!(ys.windows(2).all(|p| p[0] < p[1]));
        }
        assert!(Warp::Sharpen(2.0).apply(0.8) > 0.8);
        assert!(Warp::Flatten(2.0).apply(0.8) < 0.8);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let bad = [
            SynthConfig { prevalence: 0.0, ..SynthConfig::default() },
            SynthConfig { pool_size: 0, ..SynthConfig::default() },
            SynthConfig { pos_score_dist: (0.0, 1.0), ..SynthConfig::default() },
            SynthConfig { miscalibration: Warp::Sharpen(-1.0), ..SynthConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(synth_generate(&cfg), Err(BenchError::InvalidConfig(_))));
        }
    }

    #[test]
    fn impossible_pool_hits_the_reseed_limit() {
        let cfg = SynthConfig {
            pool_size: 10,
            threshold: 2.0,
            ..SynthConfig::default()
        };
        assert!(matches!(synth_generate(&cfg), Err(BenchError::RegenerationLimit { .. })));
    }
}
