//! Active calibration and importance sampling.
//!
//! [`Acis`] is a step-wise state machine: it proposes a batch of pool items to
//! label, waits for those labels, then scores the iteration and proposes the
//! next batch. [`acis_run`] drives it to completion with a label callback;
//! the labeling service drives the same machine one HTTP request at a time,
//! persisting [`AcisState`] in between.

use std::collections::HashSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{blend_calibrators, fit_calibration_prior, fit_isotonic, Calibrator};
use crate::error::{EstimateError, Result};
use crate::estimator::{combine_estimates, CombinedEstimate, IterationRecord, LabeledDraw, Provenance};
use crate::fscore::Alpha;
use crate::pool::ScoredPool;
use crate::sampling::{domain_size, importance_distribution, rank_by_score, SamplingPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcisConfig {
    pub alpha: Alpha,
    /// Total number of labels to acquire.
    pub budget: usize,
    pub first_batch: usize,
    pub batch_growth: f64,
    pub eps: f64,
    /// F-score guess used to build the first proposal.
    pub g0: f64,
    /// Iterations over which the prior's blend weight decays from 1 to 0.
    pub blend_iters: usize,
    /// Number of trailing iterations averaged into the final estimate.
    pub avg_window: usize,
    pub topk_multiplier: usize,
    pub restrict_domain: bool,
    pub seed: u64,
}

impl Default for AcisConfig {
    fn default() -> Self {
        Self {
            alpha: Alpha::F1,
            budget: 100,
            first_batch: 10,
            batch_growth: 2.0,
            eps: 1e-4,
            g0: 0.5,
            blend_iters: 3,
            avg_window: 3,
            topk_multiplier: 3,
            restrict_domain: true,
            seed: 0,
        }
    }
}

impl AcisConfig {
    pub fn with_budget(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self, pool_size: usize) -> Result<()> {
        let fail = |msg: String| Err(EstimateError::InvalidConfig(msg));
        if self.budget == 0 {
            return fail("budget must be positive".into());
        }
        if self.budget > pool_size {
            return Err(EstimateError::BudgetTooLarge {
                budget: self.budget,
                pool_size,
            });
        }
        if self.first_batch == 0 {
            return fail("first_batch must be at least 1".into());
        }
        if !(self.batch_growth.is_finite() && self.batch_growth >= 1.0) {
            return fail(format!("batch_growth must be >= 1, got {}", self.batch_growth));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return fail(format!("eps must lie in (0, 0.5), got {}", self.eps));
        }
        if !(0.0..=1.0).contains(&self.g0) {
            return fail(format!("g0 must lie in [0, 1], got {}", self.g0));
        }
        if self.avg_window == 0 {
            return fail("avg_window must be at least 1".into());
        }
        if self.restrict_domain && self.topk_multiplier == 0 {
            return fail("topk_multiplier must be at least 1".into());
        }
        Ok(())
    }

    /// Prior blend weight for 1-based iteration `i`.
    pub fn beta(&self, iteration: usize) -> f64 {
        if self.blend_iters == 0 {
            return if iteration <= 1 { 1.0 } else { 0.0 };
        }
        (1.0 - (iteration.saturating_sub(1)) as f64 / self.blend_iters as f64).max(0.0)
    }
}

/// A batch that has been sampled and is waiting for labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingBatch {
    pub iteration: usize,
    /// Number of labels that existed when the batch was sampled.
    pub labeled_before: usize,
    /// Every draw `(pool index, p(x)/q(x))`, duplicates included.
    pub draws: Vec<(usize, f64)>,
    /// Distinct, previously unlabeled indices in first-draw order.
    pub to_label: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// The serializable part of a run: everything needed to resume it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcisState {
    pub config: AcisConfig,
    pub rng: ChaCha8Rng,
    /// `(pool index, label)` in labeling order.
    pub labeled: Vec<(usize, bool)>,
    pub records: Vec<IterationRecord>,
    pub g_prev: f64,
    /// Planned size of the next batch before the budget cap.
    pub next_batch: usize,
    /// 0-based growth step of the restricted domain.
    pub domain_round: usize,
    pub pending: Option<PendingBatch>,
    pub complete: bool,
}

/// What the caller has to do next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Label these pool indices (those still unlabeled in the pending batch).
    NeedLabels(Vec<usize>),
    Done,
}

/// Draws above this count per needed label stop the search for fresh items.
const DRAW_CAP_PER_LABEL: usize = 200;
const DRAW_CAP_BASE: usize = 100_000;

pub struct Acis {
    pool: Arc<ScoredPool>,
    scores: Vec<f64>,
    predicted: Vec<bool>,
    ranking: Vec<usize>,
    n_pos: usize,
    prior: Arc<Calibrator>,
    labels: Vec<Option<bool>>,
    state: AcisState,
}

impl Acis {
    pub fn new(pool: Arc<ScoredPool>, config: AcisConfig) -> Result<Self> {
        config.validate(pool.len())?;
        let state = AcisState {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            labeled: Vec::new(),
            records: Vec::new(),
            g_prev: config.g0,
            next_batch: config.first_batch,
            domain_round: 0,
            pending: None,
            complete: false,
            config,
        };
        let mut acis = Self::build(pool, state)?;
        acis.prepare_batch()?;
        Ok(acis)
    }

    /// Rebuilds a run from saved state. Calibrators are derived data and are
    /// refit from the pool and the stored labels.
    pub fn resume(pool: Arc<ScoredPool>, state: AcisState) -> Result<Self> {
        state.config.validate(pool.len())?;
        let n = pool.len();
        let out_of_range = state.labeled.iter().any(|&(i, _)| i >= n)
            || state
                .pending
                .as_ref()
                .is_some_and(|p| p.draws.iter().any(|&(i, _)| i >= n) || p.to_label.iter().any(|&i| i >= n));
        if out_of_range {
            return Err(EstimateError::InvalidPool("saved run references indices beyond the pool".into()));
        }
        Self::build(pool, state)
    }

    fn build(pool: Arc<ScoredPool>, state: AcisState) -> Result<Self> {
        let scores = pool.normalized_scores();
        let predicted = pool.predicted();
        let prior = Arc::new(fit_calibration_prior(&scores, &predicted, state.config.eps)?);
        let ranking = rank_by_score(&scores);
        let n_pos = pool.positive_predictions();
        let mut labels = vec![None; pool.len()];
        for &(i, y) in &state.labeled {
            if labels[i].replace(y).is_some() {
                return Err(EstimateError::AlreadyLabeled(i));
            }
        }
        Ok(Self {
            pool,
            scores,
            predicted,
            ranking,
            n_pos,
            prior,
            labels,
            state,
        })
    }

    pub fn pool(&self) -> &Arc<ScoredPool> {
        &self.pool
    }

    pub fn config(&self) -> &AcisConfig {
        &self.state.config
    }

    pub fn state(&self) -> &AcisState {
        &self.state
    }

    pub fn into_state(self) -> AcisState {
        self.state
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.state.records
    }

    pub fn labels_used(&self) -> usize {
        self.state.labeled.len()
    }

    pub fn label_of(&self, index: usize) -> Option<bool> {
        self.labels.get(index).copied().flatten()
    }

    pub fn is_complete(&self) -> bool {
        self.state.complete
    }

    pub fn pending(&self) -> Option<&PendingBatch> {
        self.state.pending.as_ref()
    }

    /// Pending indices that still need a label.
    pub fn unlabeled_pending(&self) -> Vec<usize> {
        self.state
            .pending
            .as_ref()
            .map(|p| p.to_label.iter().copied().filter(|&i| self.labels[i].is_none()).collect())
            .unwrap_or_default()
    }

    pub fn estimate(&self) -> Result<CombinedEstimate> {
        combine_estimates(&self.state.records, self.state.config.avg_window)
    }

    pub fn next_step(&self) -> Step {
        if self.state.complete {
            Step::Done
        } else {
            Step::NeedLabels(self.unlabeled_pending())
        }
    }

    /// Records one label for a pending item. Returns the finished iteration
    /// when this label completes the batch; the next batch is then sampled
    /// before returning.
    pub fn submit(&mut self, index: usize, label: bool) -> Result<Option<&IterationRecord>> {
        if self.state.complete {
            return Err(EstimateError::RunComplete);
        }
        let pending = self.state.pending.as_ref().ok_or(EstimateError::UnknownItem(index))?;
        if !pending.to_label.contains(&index) {
            return Err(EstimateError::UnknownItem(index));
        }
        if self.labels[index].is_some() {
            return Err(EstimateError::AlreadyLabeled(index));
        }
        self.labels[index] = Some(label);
        self.state.labeled.push((index, label));

        if self.unlabeled_pending().is_empty() {
            self.finish_iteration();
            self.prepare_batch()?;
            Ok(self.state.records.last())
        } else {
            Ok(None)
        }
    }

    /// Current calibrator: prior blended with an isotonic fit to all labels.
    pub fn calibrator(&self, iteration: usize) -> Result<Calibrator> {
        let eps = self.state.config.eps;
        if self.state.labeled.is_empty() {
            return Ok((*self.prior).clone());
        }
        let pairs: Vec<(f64, f64)> = self
            .state
            .labeled
            .iter()
            .map(|&(i, y)| (self.scores[i], f64::from(u8::from(y))))
            .collect();
        let learned = Arc::new(fit_isotonic(&pairs)?.clamp_rescale(eps));
        blend_calibrators(self.prior.clone(), learned, self.state.config.beta(iteration))
    }

    fn domain(&self, round: usize) -> &[usize] {
        let n = self.pool.len();
        let k = if self.state.config.restrict_domain {
            domain_size(n, self.n_pos, round, self.state.config.topk_multiplier)
        } else {
            n
        };
        &self.ranking[..k]
    }

    /// Samples the next batch, or marks the run complete once the budget is spent.
    fn prepare_batch(&mut self) -> Result<()> {
        let budget = self.state.config.budget;
        if self.state.labeled.len() >= budget {
            self.state.complete = true;
            return Ok(());
        }
        let iteration = self.state.records.len() + 1;
        let calibrator = self.calibrator(iteration)?;
        let alpha = self.state.config.alpha;
        let n = self.pool.len();
        let mut warnings = Vec::new();

        loop {
            let domain = self.domain(self.state.domain_round).to_vec();
            let probs = self.eval_on(&calibrator, &domain);
            let plan = match importance_distribution(&probs, &self.predicted, self.state.g_prev, alpha, &domain, n) {
                Ok(plan) => plan,
                Err(EstimateError::AllZeroMass) => {
                    warnings.push("all proposal masses were zero; sampled uniformly over the domain".to_string());
                    SamplingPlan::uniform(domain.clone(), n)?
                }
                Err(e) => return Err(e),
            };
            let available = plan
                .domain()
                .iter()
                .zip(plan.masses())
                .filter(|&(&i, &m)| m > 0.0 && self.labels[i].is_none())
                .count();
            let wanted = self.state.next_batch.min(budget - self.state.labeled.len());

            if available == 0 {
                if domain.len() < n && self.state.config.restrict_domain {
                    warnings.push(format!(
                        "domain of {} items fully labeled; widening",
                        domain.len()
                    ));
                    self.state.domain_round += 1;
                    continue;
                }
                warnings.push("no unlabeled item can be drawn; stopping early".to_string());
                self.state.complete = true;
                if let Some(last) = self.state.records.last_mut() {
                    last.warnings.append(&mut warnings);
                }
                return Ok(());
            }
            let need = wanted.min(available);
            if need < wanted {
                warnings.push(format!(
                    "budget exhausted early: only {available} unlabeled items in the domain, wanted {wanted}"
                ));
            }
            let cap = DRAW_CAP_BASE + DRAW_CAP_PER_LABEL * need;
            let labels = &self.labels;
            let (draws, to_label) =
                draw_distinct(&plan, need, cap, &mut self.state.rng, |i| labels[i].is_some());
            if to_label.len() < need {
                warnings.push(format!(
                    "stopped after {} draws with {} of {need} new items",
                    draws.len(),
                    to_label.len()
                ));
            }
            let density = plan.population_density();
            let draws = draws.into_iter().map(|(i, m)| (i, density / m)).collect();
            let labeled_before = self.state.labeled.len();
            let empty = to_label.is_empty();
            self.state.pending = Some(PendingBatch {
                iteration,
                labeled_before,
                draws,
                to_label,
                warnings,
            });
            if empty {
                // Nothing new to label: score the iteration right away.
                self.finish_iteration();
                if self.state.domain_round >= self.max_rounds() {
                    self.state.complete = true;
                    return Ok(());
                }
                return self.prepare_batch();
            }
            return Ok(());
        }
    }

    fn max_rounds(&self) -> usize {
        if !self.state.config.restrict_domain || self.n_pos == 0 {
            return 1;
        }
        let per_round = self.state.config.topk_multiplier * self.n_pos;
        self.pool.len().div_ceil(per_round)
    }

    fn eval_on(&self, calibrator: &Calibrator, domain: &[usize]) -> Vec<f64> {
        let mut probs = vec![0.0; self.pool.len()];
        for &i in domain {
            probs[i] = calibrator.eval(self.scores[i]);
        }
        probs
    }

    fn finish_iteration(&mut self) {
        let Some(pending) = self.state.pending.take() else {
            return;
        };
        let alpha = self.state.config.alpha;
        let mut draws: Vec<LabeledDraw> = pending
            .draws
            .iter()
            .map(|&(i, ratio)| {
                let y = self.labels[i].expect("every drawn item is labeled when the batch completes");
                LabeledDraw::new(i, y, self.predicted[i], ratio, alpha, Provenance::Fresh)
            })
            .collect();
        let prior_labeled = &self.state.labeled[..pending.labeled_before];
        let ratio = prior_labeled.len() as f64 / self.pool.len() as f64;
        draws.extend(
            prior_labeled
                .iter()
                .map(|&(i, y)| LabeledDraw::new(i, y, self.predicted[i], ratio, alpha, Provenance::Reused)),
        );
        let mut record = IterationRecord::from_draws(pending.iteration, pending.to_label.len(), draws, self.state.g_prev);
        record.warnings.splice(0..0, pending.warnings);
        self.state.g_prev = record.g_hat;
        self.state.records.push(record);

        let grown = (self.state.next_batch as f64 * self.state.config.batch_growth).round() as usize;
        self.state.next_batch = grown.max(1);
        self.state.domain_round += 1;
    }
}

/// Draws i.i.d. from `plan` until `need` distinct items with `is_labeled(i)
/// == false` appear, or `cap` draws have been made. Returns every draw as
/// `(index, mass)` plus the new items in first-draw order.
pub(crate) fn draw_distinct<R: Rng + ?Sized>(
    plan: &SamplingPlan,
    need: usize,
    cap: usize,
    rng: &mut R,
    is_labeled: impl Fn(usize) -> bool,
) -> (Vec<(usize, f64)>, Vec<usize>) {
    let sampler = plan.sampler();
    let mut draws = Vec::new();
    let mut fresh = Vec::with_capacity(need);
    let mut seen = HashSet::with_capacity(need);
    while fresh.len() < need && draws.len() < cap {
        let (i, m) = sampler.draw(rng);
        draws.push((i, m));
        if !is_labeled(i) && seen.insert(i) {
            fresh.push(i);
        }
    }
    (draws, fresh)
}

/// Output of a complete run.
#[derive(Debug, Clone, PartialEq)]
pub struct AcisOutcome {
    pub records: Vec<IterationRecord>,
    pub estimate: CombinedEstimate,
    pub labeled: Vec<(usize, bool)>,
}

/// Runs ACIS to completion, asking `label_source` for each new label.
pub fn acis_run<F>(pool: Arc<ScoredPool>, mut label_source: F, config: AcisConfig) -> Result<AcisOutcome>
where
    F: FnMut(usize) -> bool,
{
    let mut acis = Acis::new(pool, config)?;
    while let Step::NeedLabels(indices) = acis.next_step() {
        for i in indices {
            acis.submit(i, label_source(i))?;
        }
    }
    let estimate = acis.estimate()?;
    let state = acis.into_state();
    Ok(AcisOutcome {
        records: state.records,
        estimate,
        labeled: state.labeled,
    })
}

/// Runs ACIS against a pool that carries its own ground truth.
pub fn acis_run_oracle(pool: Arc<ScoredPool>, config: AcisConfig) -> Result<AcisOutcome> {
    let truth = pool.oracle_labels()?;
    acis_run(pool, |i| truth[i], config)
}
