//! One labeling session: an [`Acis`] run over a label-free pool plus the
//! metadata that is persisted with it.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use lowshot_core::{Acis, AcisConfig, AcisState, EstimateError, ScoredPool};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    AwaitingLabels,
    ReadyToAdvance,
    Complete,
}

/// Persisted and exported form. Field order is the canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDoc {
    pub schema_version: u32,
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub state: SessionState,
    pub pool: ScoredPool,
    pub run: AcisState,
}

#[derive(Serialize)]
struct SessionDocRef<'a> {
    schema_version: u32,
    session_id: &'a str,
    created_at: &'a DateTime<Utc>,
    updated_at: &'a DateTime<Utc>,
    state: SessionState,
    pool: &'a ScoredPool,
    run: &'a AcisState,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateRequest {
    pub pool: ScoredPool,
    #[serde(default)]
    pub config: AcisConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelIn {
    pub id: String,
    pub label: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub labels: Vec<LabelIn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub labels_used: usize,
    pub budget: usize,
    pub iterations: usize,
    pub g: Option<f64>,
    pub var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub id: String,
    pub score: f64,
    pub predicted: u8,
    /// Label already submitted for this item, if any.
    pub label: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchView {
    pub session_id: String,
    pub state: SessionState,
    pub iteration: usize,
    pub items: Vec<BatchItem>,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitView {
    pub session_id: String,
    pub state: SessionState,
    pub accepted: usize,
    /// Iteration finished by this submission.
    pub completed_iteration: Option<usize>,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationView {
    pub i: usize,
    pub g: f64,
    pub var: Option<f64>,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateView {
    pub g_combined: f64,
    pub var_combined: Option<f64>,
    pub per_iteration: Vec<IterationView>,
}

pub struct Session {
    id: String,
    created_at: DateTime<Utc>,
    updated_at: DateTime<Utc>,
    acis: Acis,
    index: HashMap<String, usize>,
}

fn validation(e: EstimateError) -> ServiceError {
    ServiceError::Validation(e.to_string())
}

fn id_index(pool: &ScoredPool) -> HashMap<String, usize> {
    pool.items().iter().enumerate().map(|(i, it)| (it.id.clone(), i)).collect()
}

/// Session ids double as file names.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl Session {
    pub fn create(id: String, pool: ScoredPool, config: AcisConfig) -> Result<Self> {
        let pool = Arc::new(pool.without_labels());
        let acis = Acis::new(pool.clone(), config).map_err(validation)?;
        let now = Utc::now();
        Ok(Self {
            id,
            created_at: now,
            updated_at: now,
            index: id_index(&pool),
            acis,
        })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let probe: VersionProbe =
            serde_json::from_slice(bytes).map_err(|e| ServiceError::Validation(format!("malformed session: {e}")))?;
        let found = probe
            .schema_version
            .ok_or_else(|| ServiceError::Validation("session has no schema_version".into()))?;
        if found != SCHEMA_VERSION {
            return Err(ServiceError::SchemaMismatch {
                found,
                expected: SCHEMA_VERSION,
            });
        }
        let doc: SessionDoc =
            serde_json::from_slice(bytes).map_err(|e| ServiceError::Validation(format!("malformed session: {e}")))?;
        Self::from_doc(doc)
    }

    pub fn from_doc(doc: SessionDoc) -> Result<Self> {
        if !valid_session_id(&doc.session_id) {
            return Err(ServiceError::Validation(format!("invalid session id {:?}", doc.session_id)));
        }
        check_consistency(&doc.run)?;
        let pool = Arc::new(doc.pool.without_labels());
        let acis = Acis::resume(pool.clone(), doc.run).map_err(validation)?;
        Ok(Self {
            id: doc.session_id,
            created_at: doc.created_at,
            updated_at: doc.updated_at,
            index: id_index(&pool),
            acis,
        })
    }

    /// Canonical JSON: fixed field order, shortest round-trip floats.
    pub fn to_json(&self) -> Vec<u8> {
        let doc = SessionDocRef {
            schema_version: SCHEMA_VERSION,
            session_id: &self.id,
            created_at: &self.created_at,
            updated_at: &self.updated_at,
            state: self.state(),
            pool: self.acis.pool(),
            run: self.acis.state(),
        };
        let mut out = serde_json::to_vec_pretty(&doc).expect("session serializes");
        out.push(b'\n');
        out
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn acis(&self) -> &Acis {
        &self.acis
    }

    pub fn state(&self) -> SessionState {
        if self.acis.is_complete() {
            SessionState::Complete
        } else if self.acis.unlabeled_pending().is_empty() {
            SessionState::ReadyToAdvance
        } else {
            SessionState::AwaitingLabels
        }
    }

    pub fn progress(&self) -> Progress {
        let est = self.acis.estimate().ok().filter(|_| !self.acis.records().is_empty());
        Progress {
            labels_used: self.acis.labels_used(),
            budget: self.acis.config().budget,
            iterations: self.acis.records().len(),
            g: est.as_ref().map(|e| e.g),
            var: est.and_then(|e| e.var),
        }
    }

    pub fn batch(&self) -> Result<BatchView> {
        if self.acis.is_complete() {
            return Err(ServiceError::SessionComplete);
        }
        let pending = self
            .acis
            .pending()
            .ok_or_else(|| ServiceError::Internal("incomplete session without a pending batch".into()))?;
        let pool = self.acis.pool();
        let items = pending
            .to_label
            .iter()
            .map(|&i| {
                let item = pool.item(i);
                BatchItem {
                    id: item.id.clone(),
                    score: item.score,
                    predicted: u8::from(item.predicted),
                    label: self.acis.label_of(i).map(u8::from),
                    asset_url: item.asset_url.clone(),
                }
            })
            .collect();
        Ok(BatchView {
            session_id: self.id.clone(),
            state: self.state(),
            iteration: pending.iteration,
            items,
            progress: self.progress(),
        })
    }

    /// Checks the whole submission before applying any of it.
    fn validate_labels(&self, labels: &[LabelIn]) -> Result<Vec<(usize, bool)>> {
        if self.acis.is_complete() {
            return Err(ServiceError::SessionComplete);
        }
        if labels.is_empty() {
            return Err(ServiceError::Validation("no labels submitted".into()));
        }
        let pending: HashSet<usize> = self.acis.pending().map(|p| p.to_label.iter().copied().collect()).unwrap_or_default();
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let index = match self.index.get(&l.id) {
                Some(&i) if pending.contains(&i) => i,
                _ => return Err(ServiceError::UnknownItem(l.id.clone())),
            };
            if self.acis.label_of(index).is_some() || !seen.insert(index) {
                return Err(ServiceError::AlreadyLabeled(l.id.clone()));
            }
            let label = match l.label.as_u64() {
                Some(0) => false,
                Some(1) => true,
                _ => {
                    return Err(ServiceError::InvalidLabel {
                        id: l.id.clone(),
                        value: l.label.to_string(),
                    })
                }
            };
            out.push((index, label));
        }
        Ok(out)
    }

    /// Applies a submission. On error the session is unchanged.
    pub fn submit(&mut self, labels: &[LabelIn]) -> Result<SubmitView> {
        let checked = self.validate_labels(labels)?;
        let snapshot = self.acis.state().clone();
        let mut completed = None;
        for &(index, label) in &checked {
            match self.acis.submit(index, label) {
                Ok(Some(record)) => completed = Some(record.iteration),
                Ok(None) => {}
                Err(e) => {
                    self.restore(snapshot)?;
                    return Err(e.into());
                }
            }
        }
        self.updated_at = Utc::now();
        Ok(SubmitView {
            session_id: self.id.clone(),
            state: self.state(),
            accepted: checked.len(),
            completed_iteration: completed,
            progress: self.progress(),
        })
    }

    pub fn snapshot(&self) -> (AcisState, DateTime<Utc>) {
        (self.acis.state().clone(), self.updated_at)
    }

    pub fn rollback(&mut self, snapshot: (AcisState, DateTime<Utc>)) -> Result<()> {
        self.updated_at = snapshot.1;
        self.restore(snapshot.0)
    }

    fn restore(&mut self, state: AcisState) -> Result<()> {
        self.acis = Acis::resume(self.acis.pool().clone(), state)?;
        Ok(())
    }

    pub fn estimate(&self) -> Result<EstimateView> {
        let records = self.acis.records();
        if records.is_empty() {
            return Err(ServiceError::NoEstimateYet);
        }
        let combined = self.acis.estimate()?;
        Ok(EstimateView {
            g_combined: combined.g,
            var_combined: combined.var,
            per_iteration: records
                .iter()
                .map(|r| IterationView {
                    i: r.iteration,
                    g: r.g_hat,
                    var: r.estimate_var,
                    batch_size: r.batch_size,
                })
                .collect(),
        })
    }
}

/// Every draw in the stored records must carry the label in the label store.
fn check_consistency(run: &AcisState) -> Result<()> {
    let mut store = HashMap::with_capacity(run.labeled.len());
    for &(i, y) in &run.labeled {
        if store.insert(i, y).is_some() {
            return Err(ServiceError::Validation(format!("item index {i} labeled twice")));
        }
    }
    if store.len() > run.config.budget {
        return Err(ServiceError::Validation("label store exceeds the budget".into()));
    }
    for record in &run.records {
        for d in &record.draws {
            if store.get(&d.index) != Some(&d.label) {
                return Err(ServiceError::Validation(format!(
                    "iteration {} uses item index {} without a matching stored label",
                    record.iteration, d.index
                )));
            }
        }
    }
    Ok(())
}
