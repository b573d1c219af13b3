//! Labels collected for one model, re-scored against a family of models
//! that share the pool but use different decision thresholds.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lowshot_core::{acis_run_oracle, exact_fscore, reuse_validation_set, AcisConfig, ScoredPool};

use crate::error::Result;
use crate::synth::threshold_model;
use crate::trials::trial_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReuseRow {
    pub threshold: f64,
    pub budget: usize,
    pub trials: usize,
    pub exact: f64,
    /// MSE when the source model's labels are re-weighted for this model.
    pub mse_reused: f64,
    /// MSE of ACIS run directly on this model with the same budget.
    pub mse_direct: f64,
    pub failed: usize,
}

impl ReuseRow {
    pub fn ratio(&self) -> f64 {
        self.mse_reused / self.mse_direct
    }
}

/// For each budget and trial, runs ACIS on the `source_threshold` model,
/// reuses its records for every target threshold, and compares against a
/// direct ACIS run on the target with the same seed.
pub fn reuse_experiment(
    pool: &ScoredPool,
    source_threshold: f64,
    targets: &[f64],
    budgets: &[usize],
    trials: usize,
    template: &AcisConfig,
    seed: u64,
) -> Result<Vec<ReuseRow>> {
    let source = Arc::new(threshold_model(pool, source_threshold)?);
    let oracle = pool.oracle_labels()?;
    let models: Vec<Arc<ScoredPool>> = targets
        .iter()
        .map(|&t| threshold_model(pool, t).map(Arc::new))
        .collect::<Result<_>>()?;
    let exact: Vec<f64> = models
        .iter()
        .map(|m| exact_fscore(&oracle, &m.predicted(), template.alpha))
        .collect::<std::result::Result<_, _>>()?;

    let mut rows = Vec::new();
    for &budget in budgets {
        // per trial: Some((reused, direct)) for each target, None if the run failed
        let per_trial: Vec<Vec<Option<(f64, f64)>>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let cfg = AcisConfig {
                    budget,
                    seed: trial_seed(seed, budget, t),
                    ..template.clone()
                };
                let Ok(src) = acis_run_oracle(source.clone(), cfg.clone()) else {
                    return vec![None; models.len()];
                };
                models
                    .iter()
                    .map(|m| {
                        let reused = reuse_validation_set(&source, &src.records, m, cfg.alpha, cfg.avg_window).ok()?;
                        let direct = acis_run_oracle(m.clone(), cfg.clone()).ok()?;
                        Some((reused.g, direct.estimate.g))
                    })
                    .collect()
            })
            .collect();

        for (k, &threshold) in targets.iter().enumerate() {
            let ok: Vec<(f64, f64)> = per_trial.iter().filter_map(|r| r[k]).collect();
            let n = ok.len() as f64;
            let mse = |pick: fn(&(f64, f64)) -> f64| ok.iter().map(|p| (pick(p) - exact[k]).powi(2)).sum::<f64>() / n;
            rows.push(ReuseRow {
                threshold,
                budget,
                trials: ok.len(),
                exact: exact[k],
                mse_reused: mse(|p| p.0),
                mse_direct: mse(|p| p.1),
                failed: trials - ok.len(),
            });
        }
    }
    Ok(rows)
}
