use crate::error::Result;
use crate::fscore::{Alpha, Confusion};
use crate::pool::ScoredPool;
use crate::sampling::rank_by_score;

use super::{check_budget, BaselineResult, Method};

/// Labels the `budget` top-scored items and treats everything else as a
/// true negative.
pub fn topk_estimate(pool: &ScoredPool, oracle: &[bool], budget: usize, alpha: Alpha) -> Result<BaselineResult> {
    check_budget(pool, budget)?;
    let ranking = rank_by_score(&pool.scores());
    let labeled: Vec<(usize, bool)> = ranking[..budget].iter().map(|&i| (i, oracle[i])).collect();
    let mut known = vec![false; pool.len()];
    for &(i, y) in &labeled {
        known[i] = y;
    }
    let mut c = Confusion::default();
    for (item, &y) in pool.items().iter().zip(&known) {
        c.add(y, item.predicted);
    }
    Ok(BaselineResult::new(Method::Topk, budget, c.fscore(alpha)?, labeled))
}
