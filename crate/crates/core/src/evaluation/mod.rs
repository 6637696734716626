//! Experiment protocols over streams and maps, each producing an
//! [`EvalReport`].

mod lhs;
mod localization;
mod objects;
mod place;
mod topology;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lhs::{lhs_sample, LhsRanges};
pub use localization::{eval_localization, localization_crossval, LocalizationScore, Replication};
pub use objects::{
    eval_object_errmean, eval_object_top5, object_protocol, ErrMean, ObjectEvalInputs,
};
pub use place::{crossval_place, eval_over_time, LabelSpace, NodeTruth};
pub use topology::{eval_topology, TopologyStats};

pub const REPORT_VERSION: &str = "1.0";

/// Mean and sample standard deviation of one metric over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub values: Vec<f64>,
}

impl MetricSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        let mean = if n == 0 { f64::NAN } else { values.iter().sum::<f64>() / n as f64 };
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std, n, values }
    }
}

/// Machine-readable result of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub report_version: String,
    pub protocol: String,
    pub seed: u64,
    pub repetitions: usize,
    pub config: serde_json::Value,
    pub metrics: BTreeMap<String, MetricSummary>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn new(protocol: &str, seed: u64, repetitions: usize, config: serde_json::Value) -> Self {
        Self {
            report_version: REPORT_VERSION.to_owned(),
            protocol: protocol.to_owned(),
            seed,
            repetitions: repetitions.max(1),
            config,
            metrics: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.metrics.insert(name.into(), MetricSummary::from_values(values));
    }

    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.get(name)
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{message}");
        self.warnings.push(message);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Seed for repetition `index` of a run seeded with `seed`.
pub(crate) fn derive_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
