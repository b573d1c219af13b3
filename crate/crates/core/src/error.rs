use thiserror::Error;

pub type Result<T, E = EstimateError> = std::result::Result<T, E>;

/// Failures raised by the estimators, calibrators and samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid pool: {0}")]
    InvalidPool(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    /// No predicted positives and no true positives: the F-score is undefined.
    #[error("F-score undefined: no predicted and no actual positives")]
    DegenerateMetric,

    #[error("every sampling mass in the domain is zero")]
    AllZeroMass,

    #[error("no label available for pool index {0}")]
    MissingLabel(usize),

    /// All draws carry zero weight, so the ratio estimator is undefined.
    #[error("total importance weight is zero")]
    ZeroWeightMass,

    #[error("variance needs at least two draws, got {0}")]
    InsufficientDraws(usize),

    #[error("weights too concentrated for a variance estimate (C = {0})")]
    DegenerateWeights(f64),

    #[error("item ids of the two pools differ")]
    IdMismatch,

    #[error("label budget {budget} exceeds pool size {pool_size}")]
    BudgetTooLarge { budget: usize, pool_size: usize },

    #[error("item {0} is not part of the pending batch")]
    UnknownItem(usize),

    #[error("item {0} is already labeled")]
    AlreadyLabeled(usize),

    #[error("the run has already spent its label budget")]
    RunComplete,

    #[error("method needs a budget of at least {needed}, got {got}")]
    BudgetTooSmall { needed: usize, got: usize },
}
