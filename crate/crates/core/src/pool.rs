//! The unlabeled evaluation pool.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{EstimateError, Result};

/// One pool item: the classifier's score and hard prediction, plus the true
/// label when it is known ahead of time (synthetic or fully annotated pools).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolItem {
    pub id: String,
    pub score: f64,
    #[serde(with = "bit")]
    pub predicted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_bit")]
    pub label: Option<bool>,
    /// Opaque display hint for labeling front ends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset_url: Option<String>,
}

impl PoolItem {
    pub fn new(id: impl Into<String>, score: f64, predicted: bool) -> Self {
        Self {
            id: id.into(),
            score,
            predicted,
            label: None,
            asset_url: None,
        }
    }

    pub fn with_label(mut self, label: bool) -> Self {
        self.label = Some(label);
        self
    }
}

/// A validated pool: unique ids and finite scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredPool {
    items: Vec<PoolItem>,
}

impl ScoredPool {
    pub fn new(items: Vec<PoolItem>) -> Result<Self> {
        if items.is_empty() {
            return Err(EstimateError::EmptyInput);
        }
        let mut seen = HashSet::with_capacity(items.len());
        for item in &items {
            if !item.score.is_finite() {
                return Err(EstimateError::InvalidPool(format!(
                    "item {:?} has non-finite score {}",
                    item.id, item.score
                )));
            }
            if !seen.insert(item.id.as_str()) {
                return Err(EstimateError::InvalidPool(format!(
                    "duplicate item id {:?}",
                    item.id
                )));
            }
        }
        Ok(Self { items })
    }

    /// Builds a pool with ids `"0"`, `"1"`, ... from parallel vectors.
    pub fn from_parts(
        scores: &[f64],
        predicted: &[bool],
        labels: Option<&[bool]>,
    ) -> Result<Self> {
        if scores.len() != predicted.len() {
            return Err(EstimateError::LengthMismatch(scores.len(), predicted.len()));
        }
        if let Some(labels) = labels {
            if labels.len() != scores.len() {
                return Err(EstimateError::LengthMismatch(scores.len(), labels.len()));
            }
        }
        let items = scores
            .iter()
            .zip(predicted)
            .enumerate()
            .map(|(i, (&score, &pred))| PoolItem {
                id: i.to_string(),
                score,
                predicted: pred,
                label: labels.map(|l| l[i]),
                asset_url: None,
            })
            .collect();
        Self::new(items)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[PoolItem] {
        &self.items
    }

    pub fn item(&self, index: usize) -> &PoolItem {
        &self.items[index]
    }

    pub fn scores(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.score).collect()
    }

    pub fn predicted(&self) -> Vec<bool> {
        self.items.iter().map(|it| it.predicted).collect()
    }

    pub fn positive_predictions(&self) -> usize {
        self.items.iter().filter(|it| it.predicted).count()
    }

    /// Scores min-max rescaled to [0, 1]. A constant-score pool maps to 0.
    pub fn normalized_scores(&self) -> Vec<f64> {
        let (lo, hi) = self
            .items
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), it| {
                (lo.min(it.score), hi.max(it.score))
            });
        let span = hi - lo;
        self.items
            .iter()
            .map(|it| if span > 0.0 { (it.score - lo) / span } else { 0.0 })
            .collect()
    }

    /// The full ground-truth vector, if every item carries a label.
    pub fn oracle_labels(&self) -> Result<Vec<bool>> {
        self.items
            .iter()
            .enumerate()
            .map(|(i, it)| it.label.ok_or(EstimateError::MissingLabel(i)))
            .collect()
    }

    pub fn has_oracle(&self) -> bool {
        self.items.iter().all(|it| it.label.is_some())
    }

    /// Same pool with every ground-truth label removed.
    pub fn without_labels(&self) -> Self {
        let items = self
            .items
            .iter()
            .map(|it| PoolItem {
                label: None,
                ..it.clone()
            })
            .collect();
        Self { items }
    }

    /// Same items and labels, with predictions replaced.
    pub fn with_predictions(&self, predicted: &[bool]) -> Result<Self> {
        if predicted.len() != self.len() {
            return Err(EstimateError::LengthMismatch(self.len(), predicted.len()));
        }
        let items = self
            .items
            .iter()
            .zip(predicted)
            .map(|(it, &p)| PoolItem {
                predicted: p,
                ..it.clone()
            })
            .collect();
        Ok(Self { items })
    }

    /// Same items with every score passed through `f`.
    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let items = self
            .items
            .iter()
            .map(|it| PoolItem {
                score: f(it.score),
                ..it.clone()
            })
            .collect();
        Self::new(items)
    }

    pub fn same_ids(&self, other: &ScoredPool) -> bool {
        self.len() == other.len()
            && self
                .items
                .iter()
                .zip(&other.items)
                .all(|(a, b)| a.id == b.id)
    }
}

impl<'de> Deserialize<'de> for ScoredPool {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            items: Vec<PoolItem>,
        }
        let raw = Raw::deserialize(de)?;
        ScoredPool::new(raw.items).map_err(serde::de::Error::custom)
    }
}

/// Booleans carried as the integers 0 and 1 on the wire.
pub mod bit {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<bool, D::Error> {
        match u8::deserialize(de)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(de::Error::custom(format!("expected 0 or 1, got {other}"))),
        }
    }
}

pub mod opt_bit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<bool>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_some(&u8::from(*v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<bool>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::bit")] bool);
        Ok(Option::<Wrap>::deserialize(de)?.map(|w| w.0))
    }
}
