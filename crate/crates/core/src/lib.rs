//! Estimating a binary classifier's F-score on a large unlabeled pool from a
//! small labeling budget.
//!
//! The main entry point is [`acis::acis_run`], which alternates between
//! calibrating the classifier's scores on the labels gathered so far and
//! importance-sampling the next batch of items to label. Every comparison
//! method lives in [`baselines`].

pub mod acis;
pub mod baselines;
pub mod calibration;
pub mod error;
pub mod estimator;
pub mod fscore;
pub mod pool;
pub mod reuse;
pub mod sampling;

pub use acis::{acis_run, acis_run_oracle, Acis, AcisConfig, AcisOutcome, AcisState, PendingBatch, Step};
pub use baselines::{estimate, BaselineResult, Method};
pub use calibration::{
    blend_calibrators, fit_calibration_prior, fit_isotonic, fit_platt, Calibrator, CalibratorKind,
};
pub use error::{EstimateError, Result};
pub use estimator::{
    combine_estimates, is_fscore, make_draws, reuse_draws, variance_estimate, CombinedEstimate,
    IterationRecord, LabeledDraw, Provenance, VarianceEstimate,
};
pub use fscore::{exact_fscore, Alpha, Confusion};
pub use pool::{PoolItem, ScoredPool};
pub use reuse::reuse_validation_set;
pub use sampling::{importance_distribution, restrict_domain, weighted_sample, SamplingPlan};
