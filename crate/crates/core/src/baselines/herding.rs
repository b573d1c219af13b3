//! Kernel herding in 1-D score space.

use crate::error::Result;
use crate::fscore::Alpha;
use crate::pool::ScoredPool;

use super::{plug_in_subset, BaselineResult, Method};

/// Kernel contributions beyond this many bandwidths are dropped (< 1e-10).
const CUTOFF_BANDWIDTHS: f64 = 7.0;

/// Silverman's rule of thumb, `1.06 · σ · n^(-1/5)`; 1 for constant scores.
pub fn silverman_bandwidth(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        1.06 * sd * n.powf(-0.2)
    } else {
        1.0
    }
}

struct Neighborhoods {
    order: Vec<usize>,
    sorted: Vec<f64>,
    /// position of each index inside `order`
    rank: Vec<usize>,
    bandwidth: f64,
}

impl Neighborhoods {
    fn new(xs: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
        let mut rank = vec![0; xs.len()];
        for (pos, &i) in order.iter().enumerate() {
            rank[i] = pos;
        }
        Self {
            order,
            sorted,
            rank,
            bandwidth: silverman_bandwidth(xs),
        }
    }

    fn kernel(&self, a: f64, b: f64) -> f64 {
        let d = (a - b) / self.bandwidth;
        (-0.5 * d * d).exp()
    }

    /// Calls `f(j, k(x_i, x_j))` for every j within the cutoff of item i.
    fn for_each_near(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        let x = self.sorted[self.rank[i]];
        let reach = CUTOFF_BANDWIDTHS * self.bandwidth;
        let lo = self.sorted.partition_point(|&s| s < x - reach);
        let hi = self.sorted.partition_point(|&s| s <= x + reach);
        for pos in lo..hi {
            f(self.order[pos], self.kernel(x, self.sorted[pos]));
        }
    }
}

/// Greedy herding: each step picks the unselected index maximizing
/// `(t + 1) · μ(x) − Σ_selected k(x, x_s)`, where μ is the pool's mean kernel
/// embedding. Deterministic; ties go to the lowest index.
pub fn herding_select(pool: &ScoredPool, budget: usize) -> Vec<usize> {
    let xs = pool.normalized_scores();
    let n = xs.len();
    let budget = budget.min(n);
    let hood = Neighborhoods::new(&xs);

    let mut embedding = vec![0.0; n];
    for (i, e) in embedding.iter_mut().enumerate() {
        let mut acc = 0.0;
        hood.for_each_near(i, |_, k| acc += k);
        *e = acc / n as f64;
    }

    let mut penalty = vec![0.0; n];
    let mut selected = vec![false; n];
    let mut picks = Vec::with_capacity(budget);
    for t in 0..budget {
        let scale = (t + 1) as f64;
        let mut best = None;
        let mut best_val = f64::NEG_INFINITY;
        for i in 0..n {
            if selected[i] {
                continue;
            }
            let v = scale * embedding[i] - penalty[i];
            if v > best_val {
                best_val = v;
                best = Some(i);
            }
        }
        let Some(pick) = best else { break };
        selected[pick] = true;
        picks.push(pick);
        hood.for_each_near(pick, |j, k| penalty[j] += k);
    }
    picks
}

/// Plug-in F-score over the herded sample.
pub fn herding_estimate(pool: &ScoredPool, oracle: &[bool], budget: usize, alpha: Alpha) -> Result<BaselineResult> {
    let labeled: Vec<(usize, bool)> = herding_select(pool, budget).into_iter().map(|i| (i, oracle[i])).collect();
    let g = plug_in_subset(pool, &labeled, alpha)?;
    Ok(BaselineResult::new(Method::Herding, budget, g, labeled))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(scores: &[f64]) -> ScoredPool {
        let predicted: Vec<bool> = scores.iter().map(|&s| s > 0.5).collect();
        ScoredPool::from_parts(scores, &predicted, None).unwrap()
    }

    fn sample_scores(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).map(|u| u * u).collect()
    }

    #[test]
    fn first_pick_maximizes_mean_embedding() {
        let scores = sample_scores(300);
        let p = pool(&scores);
        let xs = p.normalized_scores();
        let h = silverman_bandwidth(&xs);
        let brute = (0..xs.len())
            .map(|i| xs.iter().map(|&x| (-0.5 * ((xs[i] - x) / h).powi(2)).exp()).sum::<f64>())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
            .0;
        let pick = herding_select(&p, 1)[0];
        assert!((xs[pick] - xs[brute]).abs() < 1e-12);
    }

    #[test]
    fn selection_is_deterministic_and_exhaustive() {
        let p = pool(&sample_scores(64));
        assert_eq!(herding_select(&p, 20), herding_select(&p, 20));
        let mut all = herding_select(&p, 64);
        all.sort_unstable();
        assert_eq!(all, (0..64).collect::<Vec<_>>());
    }
}
