//! Benchmark configuration file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use lowshot_core::{AcisConfig, Alpha, Method};

use crate::error::{BenchError, Result};
use crate::synth::SynthConfig;
use crate::trials::TrialSpec;

/// Everything `lowshot bench` needs: the pool recipe and the trial grid.
/// Every field is optional in the JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub synth: SynthConfig,
    pub methods: Vec<Method>,
    pub budgets: Vec<usize>,
    pub trials: usize,
    pub alpha: Alpha,
    pub seed: u64,
    pub acis: AcisConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            methods: Method::ALL.to_vec(),
            budgets: vec![10, 20, 40, 100, 300, 600],
            trials: 100,
            alpha: Alpha::F1,
            seed: 0,
            acis: AcisConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn trial_spec(&self) -> Result<TrialSpec> {
        if self.methods.is_empty() || self.budgets.is_empty() {
            return Err(BenchError::InvalidConfig("methods and budgets must be nonempty".into()));
        }
        Ok(TrialSpec {
            methods: self.methods.clone(),
            budgets: self.budgets.clone(),
            trials: self.trials,
            alpha: self.alpha,
            seed: self.seed,
            acis: self.acis.clone(),
        })
    }
}
