//! Hyperparameters of map building and localization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The full knob set of the mapping and localization method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    /// Spatial distance threshold in meters.
    pub lambda: f64,
    /// Feature learning rate, in ]0,1[.
    pub alpha: f64,
    /// Habituation threshold on squared feature distance.
    pub tau: f64,
    /// Persistence rate, in ]0,1[.
    pub gamma: f64,
    /// Moving-average rate of the feature distance vector, in ]0,1[.
    pub beta: f64,
    /// Relevance smoothness (slope of the inverse logistic).
    pub s_slope: f64,
    /// Activation stabilizer.
    pub epsilon: f64,
}

pub const DEFAULT_LAMBDA: f64 = 0.9;
pub const DEFAULT_EPSILON: f64 = 1e-7;

impl Default for Hyperparameters {
    /// λ = 0.9, ε = 1e-7, everything else at the midpoint of its search range.
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            alpha: (0.001 + 0.1) / 2.0,
            tau: (1.0 + 100.0) / 2.0,
            gamma: (0.001 + 0.999) / 2.0,
            beta: (0.001 + 0.999) / 2.0,
            s_slope: (0.001 + 0.1) / 2.0,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

fn open_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must lie in ]0,1[, got {v}"),
        })
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {v}"),
        })
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        positive("lambda", self.lambda)?;
        open_unit("alpha", self.alpha)?;
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("must be nonnegative and finite, got {}", self.tau),
            });
        }
        open_unit("gamma", self.gamma)?;
        open_unit("beta", self.beta)?;
        positive("s_slope", self.s_slope)?;
        positive("epsilon", self.epsilon)?;
        Ok(())
    }
}

/// Method variant: the full method or one of its ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Full method.
    #[default]
    Pm,
    /// Without visual habituation: the gate always passes (τ forced to 0).
    #[value(name = "pm-no-vh")]
    PmNoVh,
    /// Without visual persistence: new nodes start from the input vector only.
    #[value(name = "pm-no-vp")]
    PmNoVp,
}

impl Variant {
    pub fn habituation(self) -> bool {
        self != Variant::PmNoVh
    }

    pub fn persistence(self) -> bool {
        self != Variant::PmNoVp
    }

    /// Effective habituation threshold under this variant.
    pub fn effective_tau(self, tau: f64) -> f64 {
        if self.habituation() {
            tau
        } else {
            0.0
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Pm => "pm",
            Variant::PmNoVh => "pm-no-vh",
            Variant::PmNoVp => "pm-no-vp",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_midpoints() {
        let p = Hyperparameters::default();
        p.validate().unwrap();
        assert_eq!(p.lambda, 0.9);
        assert_eq!(p.epsilon, 1e-7);
        assert!((p.alpha - 0.0505).abs() < 1e-15);
        assert!((p.tau - 50.5).abs() < 1e-12);
        assert!((p.gamma - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        let base = Hyperparameters::default();
        for bad in [
            Hyperparameters { alpha: 1.0, ..base },
            Hyperparameters { alpha: 0.0, ..base },
            Hyperparameters { gamma: 0.0, ..base },
            Hyperparameters { beta: 1.5, ..base },
            Hyperparameters { tau: -1.0, ..base },
            Hyperparameters { lambda: 0.0, ..base },
            Hyperparameters { s_slope: 0.0, ..base },
            Hyperparameters { epsilon: f64::NAN, ..base },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        Hyperparameters { tau: 0.0, ..base }.validate().unwrap();
    }

    #[test]
    fn variant_switches() {
        assert_eq!(Variant::PmNoVh.effective_tau(5.0), 0.0);
        assert_eq!(Variant::Pm.effective_tau(5.0), 5.0);
        assert!(!Variant::PmNoVp.persistence());
        assert!(Variant::PmNoVh.persistence());
    }
}
