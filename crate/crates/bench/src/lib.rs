//! Benchmark harness: synthetic pools with exact ground truth, repeated
//! trials of every estimator, and plot-ready report tables.

pub mod config;
pub mod error;
pub mod finite;
pub mod pool_io;
pub mod report;
pub mod reuse;
pub mod synth;
pub mod trials;

pub use config::BenchConfig;
pub use error::{BenchError, Result};
pub use finite::{analytic_subset_variance, finite_dataset_variance, FiniteVarianceRow};
pub use pool_io::{read_pool, read_pool_from, write_pool, write_pool_to, PoolFormat};
pub use report::{emit_report, read_report, write_report, ReportFormat};
pub use reuse::{reuse_experiment, ReuseRow};
pub use synth::{synth_generate, SynthConfig, Warp};
pub use trials::{run_trials, trial_seed, TrialReport, TrialSpec};
