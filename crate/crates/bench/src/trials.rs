//! Repeated seeded trials of each method at each budget.

use std::sync::Arc;
use std::time::Instant;

use log::warn;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lowshot_core::{estimate, exact_fscore, AcisConfig, Alpha, Method, ScoredPool};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub methods: Vec<Method>,
    pub budgets: Vec<usize>,
    pub trials: usize,
    pub alpha: Alpha,
    pub seed: u64,
    /// Template for the ACIS knobs; budget, alpha and seed are overwritten per trial.
    pub acis: AcisConfig,
}

impl TrialSpec {
    pub fn new(methods: Vec<Method>, budgets: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            methods,
            budgets,
            trials,
            alpha: Alpha::F1,
            seed,
            acis: AcisConfig::default(),
        }
    }
}

/// One row of a benchmark table. Moments are population forms over the
/// successful trials, so `mse = bias² + empirical_var`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub method: Method,
    pub budget: usize,
    /// Successful trials.
    pub trials: usize,
    pub mse: f64,
    pub bias: f64,
    pub empirical_var: f64,
    /// Mean single-run variance estimate (ACIS variants and SAWADE).
    pub mean_predicted_var: Option<f64>,
    pub runtime_ms: f64,
    /// Trials that returned an error and were left out.
    pub failed: usize,
}

/// Per-trial seed: word 0 of ChaCha8 stream `trial` keyed by the master seed.
/// Every method sees the same seed for the same trial.
pub fn trial_seed(master: u64, budget: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master ^ (budget as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(trial as u64);
    rng.next_u64()
}

pub fn run_trials(pool: &Arc<ScoredPool>, spec: &TrialSpec) -> Result<Vec<TrialReport>> {
    if spec.trials == 0 {
        return Err(BenchError::InvalidConfig("trials must be at least 1".into()));
    }
    let oracle = pool.oracle_labels()?;
    let truth = exact_fscore(&oracle, &pool.predicted(), spec.alpha)?;
    let mut out = Vec::new();
    for &method in &spec.methods {
        for &budget in &spec.budgets {
            out.push(run_cell(pool, &oracle, truth, method, budget, spec)?);
        }
    }
    Ok(out)
}

fn run_cell(
    pool: &Arc<ScoredPool>,
    oracle: &[bool],
    truth: f64,
    method: Method,
    budget: usize,
    spec: &TrialSpec,
) -> Result<TrialReport> {
    if budget > pool.len() {
        return Err(BenchError::InvalidConfig(format!(
            "budget {budget} exceeds pool size {}",
            pool.len()
        )));
    }
    let trials = if method.is_deterministic() { 1 } else { spec.trials };
    let started = Instant::now();
    let results: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = AcisConfig {
                budget,
                alpha: spec.alpha,
                seed: trial_seed(spec.seed, budget, t),
                ..spec.acis.clone()
            };
            estimate(method, pool, oracle, &cfg)
        })
        .collect();
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut estimates = Vec::with_capacity(trials);
    let mut predicted_vars = Vec::new();
    let mut failed = 0;
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => {
                estimates.push(r.g_hat);
                if let Some(v) = r.variance {
                    predicted_vars.push(v);
                }
            }
            Err(e) => {
                warn!("{method} budget {budget} trial {t} failed: {e}");
                failed += 1;
            }
        }
    }
    let n = estimates.len() as f64;
    let (mse, bias, empirical_var) = if estimates.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mean = estimates.iter().sum::<f64>() / n;
        let var = estimates.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
        let mse = estimates.iter().map(|g| (g - truth).powi(2)).sum::<f64>() / n;
        (mse, mean - truth, var)
    };
    let mean_predicted_var = (method.predicts_variance() && !predicted_vars.is_empty())
        .then(|| predicted_vars.iter().sum::<f64>() / predicted_vars.len() as f64);
    Ok(TrialReport {
        method,
        budget,
        trials: estimates.len(),
        mse,
        bias,
        empirical_var,
        mean_predicted_var,
        runtime_ms,
        failed,
    })
}
