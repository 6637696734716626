//! Run configuration documents (TOML). Every command-line flag has a
//! counterpart here; flags win when both are given.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::TrainConfig;
use crate::dataset::SynthConfig;
use crate::error::{Error, Result};
use crate::evaluation::{LhsRanges, Replication};
use crate::params::{Hyperparameters, Variant};

pub const CONFIG_VERSION: &str = "1.0";

/// Partial hyperparameter set; unset fields keep their base value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    #[serde(alias = "slope")]
    pub s_slope: Option<f64>,
    pub epsilon: Option<f64>,
}

impl ParamOverrides {
    /// Overrides in `other` take precedence over those in `self`.
    pub fn merged(self, other: ParamOverrides) -> ParamOverrides {
        ParamOverrides {
            lambda: other.lambda.or(self.lambda),
            alpha: other.alpha.or(self.alpha),
            tau: other.tau.or(self.tau),
            gamma: other.gamma.or(self.gamma),
            beta: other.beta.or(self.beta),
            s_slope: other.s_slope.or(self.s_slope),
            epsilon: other.epsilon.or(self.epsilon),
        }
    }

    pub fn apply(&self, base: Hyperparameters) -> Hyperparameters {
        Hyperparameters {
            lambda: self.lambda.unwrap_or(base.lambda),
            alpha: self.alpha.unwrap_or(base.alpha),
            tau: self.tau.unwrap_or(base.tau),
            gamma: self.gamma.unwrap_or(base.gamma),
            beta: self.beta.unwrap_or(base.beta),
            s_slope: self.s_slope.unwrap_or(base.s_slope),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
        }
    }
}

/// Declarative description of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: String,
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    /// Extra variants compared by the object and localization protocols.
    #[serde(default)]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub hyperparameters: ParamOverrides,
    /// `FRAC:COPIES`.
    pub replicate: Option<String>,
    pub top_k: Option<usize>,
    pub repetitions: Option<usize>,
    /// Evaluation protocol name for `eval`.
    pub protocol: Option<String>,
    #[serde(default)]
    pub streams: Vec<PathBuf>,
    pub train: Option<PathBuf>,
    pub query: Option<PathBuf>,
    pub map: Option<PathBuf>,
    pub head: Option<PathBuf>,
    pub subset: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mlp: Option<TrainConfig>,
    pub synth: Option<SynthConfig>,
    pub lhs: Option<LhsRanges>,
}

impl RunConfig {
    pub fn new() -> Self {
        Self {
            config_version: CONFIG_VERSION.to_owned(),
            ..Default::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config document; relative paths inside it are resolved
    /// against the document's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(one_line(&e.to_string())))
    }

    pub fn validate(&self) -> Result<()> {
        let major = self.config_version.split('.').next().unwrap_or("");
        if major != "1" {
            return Err(Error::UnsupportedVersion {
                found: self.config_version.clone(),
                supported: 1,
            });
        }
        self.hyperparameters.apply(Hyperparameters::default()).validate()?;
        if let Some(r) = &self.replicate {
            r.parse::<Replication>()?;
        }
        if let Some(m) = &self.mlp {
            m.validate()?;
        }
        if let Some(s) = &self.synth {
            s.validate()?;
        }
        if let Some(l) = &self.lhs {
            l.validate()?;
        }
        Ok(())
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        self.streams.iter_mut().for_each(fix);
        for p in [
            &mut self.train,
            &mut self.query,
            &mut self.map,
            &mut self.head,
            &mut self.subset,
            &mut self.model,
            &mut self.out,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn hyperparameters(&self, flags: ParamOverrides) -> Result<Hyperparameters> {
        let p = self.hyperparameters.merged(flags).apply(Hyperparameters::default());
        p.validate()?;
        Ok(p)
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
