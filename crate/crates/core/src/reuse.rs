//! Re-scoring a labeled validation set against a different model.

use std::collections::HashMap;

use crate::error::{EstimateError, Result};
use crate::estimator::{combine_estimates, CombinedEstimate, IterationRecord};
use crate::fscore::Alpha;
use crate::pool::ScoredPool;

/// Re-weights every stored draw with `other`'s predictions (labels and
/// sampling densities unchanged) and recombines the per-iteration estimates.
///
/// `source` is the pool the records were collected on; `other` must contain
/// exactly the same item ids, in any order.
pub fn reuse_validation_set(
    source: &ScoredPool,
    records: &[IterationRecord],
    other: &ScoredPool,
    alpha: Alpha,
    window: usize,
) -> Result<CombinedEstimate> {
    let mapping = index_mapping(source, other)?;
    let mut g_prev = 0.5;
    let rescored: Vec<IterationRecord> = records
        .iter()
        .map(|r| {
            let draws = r
                .draws
                .iter()
                .map(|d| d.repredict(other.item(mapping[d.index]).predicted, alpha))
                .collect();
            let rec = IterationRecord::from_draws(r.iteration, r.batch_size, draws, g_prev);
            g_prev = rec.g_hat;
            rec
        })
        .collect();
    combine_estimates(&rescored, window)
}

/// `mapping[i]` is the index in `other` of `source`'s item `i`.
fn index_mapping(source: &ScoredPool, other: &ScoredPool) -> Result<Vec<usize>> {
    if source.len() != other.len() {
        return Err(EstimateError::IdMismatch);
    }
    if source.same_ids(other) {
        return Ok((0..source.len()).collect());
    }
    let by_id: HashMap<&str, usize> = other
        .items()
        .iter()
        .enumerate()
        .map(|(i, it)| (it.id.as_str(), i))
        .collect();
    source
        .items()
        .iter()
        .map(|it| by_id.get(it.id.as_str()).copied().ok_or(EstimateError::IdMismatch))
        .collect()
}
