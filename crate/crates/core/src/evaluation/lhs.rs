use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Hyperparameters;

/// Search range `(min, max)` per sampled hyperparameter. λ and ε are never
/// sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LhsRanges {
    pub alpha: (f64, f64),
    pub tau: (f64, f64),
    pub gamma: (f64, f64),
    pub beta: (f64, f64),
    pub s_slope: (f64, f64),
}

impl Default for LhsRanges {
    fn default() -> Self {
        Self {
            alpha: (0.001, 0.1),
            tau: (1.0, 100.0),
            gamma: (0.001, 0.999),
            beta: (0.001, 0.999),
            s_slope: (0.001, 0.1),
        }
    }
}

impl LhsRanges {
    fn dims(&self) -> [(&'static str, (f64, f64)); 5] {
        [
            ("alpha", self.alpha),
            ("tau", self.tau),
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("s_slope", self.s_slope),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in self.dims() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("range needs min < max, got ({lo}, {hi})"),
                });
            }
        }
        Ok(())
    }
}

/// Latin hypercube sample of `n` hyperparameter sets. Each range is cut
/// into `n` equal strata and every stratum is used exactly once per
/// dimension; λ and ε are copied from `base`.
pub fn lhs_sample(ranges: &LhsRanges, n: usize, rng_seed: u64, base: &Hyperparameters) -> Result<Vec<Hyperparameters>> {
    ranges.validate()?;
    if n == 0 {
        return Err(Error::Usage("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let columns: Vec<Vec<f64>> = ranges
        .dims()
        .iter()
        .map(|&(_, (lo, hi))| {
            let mut strata: Vec<usize> = (0..n).collect();
            strata.shuffle(&mut rng);
            let width = (hi - lo) / n as f64;
            strata
                .into_iter()
                .map(|k| {
                    let v = lo + (k as f64 + rng.random::<f64>()) * width;
                    // keep the draw inside its own stratum despite rounding
                    v.clamp(lo + k as f64 * width, (lo + (k + 1) as f64 * width).min(hi))
                })
                .collect()
        })
        .collect();
    Ok((0..n)
        .map(|i| Hyperparameters {
            alpha: columns[0][i],
            tau: columns[1][i],
            gamma: columns[2][i],
            beta: columns[3][i],
            s_slope: columns[4][i],
            ..*base
        })
        .collect())
}
