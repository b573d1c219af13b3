//! Comparison methods, all behind [`estimate`].

mod gmm;
mod herding;
mod sawade;
mod topk;
mod uniform;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::acis::{acis_run, AcisConfig};
use crate::error::{EstimateError, Result};
use crate::fscore::{Alpha, Confusion};
use crate::pool::ScoredPool;

pub use gmm::{fit_gmm_1d, gmm_estimate, GaussianMixture, GmmInit};
pub use herding::{herding_estimate, herding_select, silverman_bandwidth};
pub use sawade::{sawade_estimate, sawade_guess, sawade_plan};
pub use topk::topk_estimate;
pub use uniform::{calibrate_infer_estimate, rand_estimate, InferKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Acis,
    AcisLast,
    Topk,
    Gmm,
    Herding,
    Sawade,
    Rand,
    Iso,
    Platt,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Acis,
        Method::AcisLast,
        Method::Topk,
        Method::Gmm,
        Method::Herding,
        Method::Sawade,
        Method::Rand,
        Method::Iso,
        Method::Platt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Acis => "ACIS",
            Method::AcisLast => "ACIS_LAST",
            Method::Topk => "TOPK",
            Method::Gmm => "GMM",
            Method::Herding => "HERDING",
            Method::Sawade => "SAWADE",
            Method::Rand => "RAND",
            Method::Iso => "ISO",
            Method::Platt => "PLATT",
        }
    }

    /// Methods that report a single-run variance estimate.
    pub fn predicts_variance(self) -> bool {
        matches!(self, Method::Acis | Method::AcisLast | Method::Sawade)
    }

    /// Methods whose output does not depend on the seed.
    pub fn is_deterministic(self) -> bool {
        matches!(self, Method::Topk | Method::Gmm | Method::Herding)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = EstimateError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        let key = match key.as_str() {
            "TOP_K" => "TOPK",
            "ISOTONIC" => "ISO",
            "RANDOM" => "RAND",
            other => other,
        };
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| EstimateError::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// One point of an iterative method's estimate trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub g: f64,
    pub var: Option<f64>,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub method: Method,
    pub budget: usize,
    pub g_hat: f64,
    /// Single-run variance estimate, for the methods that have one.
    pub variance: Option<f64>,
    pub labels_used: Vec<(usize, bool)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<TrajectoryPoint>,
}

impl BaselineResult {
    pub(crate) fn new(method: Method, budget: usize, g_hat: f64, labels_used: Vec<(usize, bool)>) -> Self {
        Self {
            method,
            budget,
            g_hat: g_hat.clamp(0.0, 1.0),
            variance: None,
            labels_used,
            trajectory: Vec::new(),
        }
    }
}

/// Runs `method` against a pool whose ground truth is `oracle`.
///
/// `config` supplies budget, alpha, seed and eps to every method; the
/// remaining ACIS knobs only matter for the ACIS variants.
pub fn estimate(method: Method, pool: &Arc<ScoredPool>, oracle: &[bool], config: &AcisConfig) -> Result<BaselineResult> {
    if oracle.len() != pool.len() {
        return Err(EstimateError::LengthMismatch(pool.len(), oracle.len()));
    }
    let budget = config.budget;
    check_budget(pool, budget)?;
    let alpha = config.alpha;
    match method {
        Method::Acis | Method::AcisLast => {
            let mut cfg = config.clone();
            if method == Method::AcisLast {
                cfg.avg_window = 1;
            }
            let out = acis_run(pool.clone(), |i| oracle[i], cfg)?;
            let trajectory = out
                .records
                .iter()
                .map(|r| TrajectoryPoint {
                    iteration: r.iteration,
                    g: r.g_hat,
                    var: r.estimate_var,
                    batch_size: r.batch_size,
                })
                .collect();
            Ok(BaselineResult {
                method,
                budget,
                g_hat: out.estimate.g,
                variance: out.estimate.var,
                labels_used: out.labeled,
                trajectory,
            })
        }
        Method::Topk => topk_estimate(pool, oracle, budget, alpha),
        Method::Gmm => gmm_estimate(pool, oracle, budget, alpha),
        Method::Herding => herding_estimate(pool, oracle, budget, alpha),
        Method::Sawade => sawade_estimate(pool, oracle, budget, alpha, config.eps, config.seed),
        Method::Rand => rand_estimate(pool, oracle, budget, alpha, config.seed),
        Method::Iso => calibrate_infer_estimate(pool, oracle, budget, alpha, InferKind::Isotonic, config.eps, config.seed),
        Method::Platt => calibrate_infer_estimate(pool, oracle, budget, alpha, InferKind::Platt, config.eps, config.seed),
    }
}

pub(crate) fn check_budget(pool: &ScoredPool, budget: usize) -> Result<()> {
    if budget > pool.len() {
        return Err(EstimateError::BudgetTooLarge {
            budget,
            pool_size: pool.len(),
        });
    }
    Ok(())
}

/// Plug-in F-score over `indices` using their true labels.
pub(crate) fn plug_in_subset(pool: &ScoredPool, labeled: &[(usize, bool)], alpha: Alpha) -> Result<f64> {
    let mut c = Confusion::default();
    for &(i, y) in labeled {
        c.add(y, pool.item(i).predicted);
    }
    c.fscore(alpha)
}
