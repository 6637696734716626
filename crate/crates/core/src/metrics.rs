//! Distance functions shared by map building and localization.
//!
//! Feature vectors are stored as `f32`; every sum is accumulated in `f64`.

use crate::error::{check_dim, Error, Result};

/// A capture or node position on the ground plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

/// Euclidean distance between two positions.
pub fn euclidean_distance(a: Vec2, b: Vec2) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Sum of squared component differences, no square root.
pub fn squared_euclidean(v: &[f32], u: &[f32]) -> Result<f64> {
    check_dim(v.len(), u.len())?;
    Ok(squared_euclidean_unchecked(v, u))
}

pub(crate) fn squared_euclidean_unchecked(v: &[f32], u: &[f32]) -> f64 {
    v.iter()
        .zip(u)
        .map(|(&a, &b)| {
            let d = f64::from(a) - f64::from(b);
            d * d
        })
        .sum()
}

/// `sqrt(Σ w_i (x_i − c_i)²)`. Weights must be nonnegative.
pub fn weighted_euclidean(x: &[f32], c: &[f32], w: &[f64]) -> Result<f64> {
    check_dim(x.len(), c.len())?;
    check_dim(x.len(), w.len())?;
    if let Some(bad) = w.iter().find(|&&wi| !(wi >= 0.0)) {
        return Err(Error::InvalidParameter {
            name: "weight",
            reason: format!("weights must be nonnegative, got {bad}"),
        });
    }
    Ok(weighted_euclidean_unchecked(x, c, w))
}

pub(crate) fn weighted_euclidean_unchecked(x: &[f32], c: &[f32], w: &[f64]) -> f64 {
    x.iter()
        .zip(c)
        .zip(w)
        .map(|((&a, &b), &wi)| {
            let d = f64::from(a) - f64::from(b);
            wi * d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_distance(Vec2::new(0.0, 0.0), Vec2::new(3.0, 4.0)), 5.0);
        assert_eq!(euclidean_distance(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)), 0.0);
        assert_eq!(euclidean_distance(Vec2::new(0.0, 0.0), Vec2::new(0.9, 0.0)), 0.9);
    }

    #[test]
    fn squared_examples() {
        assert_eq!(squared_euclidean(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(squared_euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        assert!(matches!(
            squared_euclidean(&[0.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn squared_matches_two_pass_oracle_1024d() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let v: Vec<f32> = (0..1024).map(|_| rng.random_range(-3.0..3.0)).collect();
        let u: Vec<f32> = (0..1024).map(|_| rng.random_range(-3.0..3.0)).collect();
        // two passes: differences first, then a plain indexed sum
        let diffs: Vec<f64> = (0..1024).map(|i| v[i] as f64 - u[i] as f64).collect();
        let mut oracle = 0.0f64;
        for d in &diffs {
            oracle += d * d;
        }
        let got = squared_euclidean(&v, &u).unwrap();
        assert!(((got - oracle) / oracle).abs() < 1e-9);
    }

    #[test]
    fn weighted_examples() {
        let w1 = [1.0, 1.0];
        assert_eq!(weighted_euclidean(&[2.0, 5.0], &[2.0, 5.0], &[0.3, 0.9]).unwrap(), 0.0);
        assert_eq!(weighted_euclidean(&[0.0, 0.0], &[3.0, 4.0], &w1).unwrap(), 5.0);
        assert_eq!(weighted_euclidean(&[0.0, 0.0], &[3.0, 4.0], &[1.0, 0.0]).unwrap(), 3.0);
        assert!(matches!(
            weighted_euclidean(&[0.0, 0.0], &[3.0, 4.0], &[1.0, -0.5]),
            Err(Error::InvalidParameter { .. })
        ));
    }

    fn feat_pair() -> impl Strategy<Value = (Vec<f32>, Vec<f32>, Vec<f64>)> {
        (1usize..64).prop_flat_map(|n| {
            (
                prop::collection::vec(-100.0f32..100.0, n),
                prop::collection::vec(-100.0f32..100.0, n),
                prop::collection::vec(0.0f64..1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn distances_symmetric_nonnegative((a, b, w) in feat_pair()) {
            let d1 = squared_euclidean(&a, &b).unwrap();
            let d2 = squared_euclidean(&b, &a).unwrap();
            prop_assert!(d1 >= 0.0);
            prop_assert_eq!(d1, d2);
            let w1 = weighted_euclidean(&a, &b, &w).unwrap();
            let w2 = weighted_euclidean(&b, &a, &w).unwrap();
            prop_assert!(w1 >= 0.0);
            prop_assert_eq!(w1, w2);
        }

        #[test]
        fn unit_weights_reduce_to_euclidean((a, b, _w) in feat_pair()) {
            let ones = vec![1.0; a.len()];
            let weighted = weighted_euclidean(&a, &b, &ones).unwrap();
            let sq = squared_euclidean(&a, &b).unwrap();
            let plain = sq.sqrt();
            prop_assert!((weighted - plain).abs() <= 1e-12 * plain.max(1e-300));
            prop_assert!((weighted * weighted - sq).abs() <= 1e-9 * sq.max(1e-300));
        }

        #[test]
        fn planar_symmetric(ax in -1e3f64..1e3, ay in -1e3f64..1e3, bx in -1e3f64..1e3, by in -1e3f64..1e3) {
            let a = Vec2::new(ax, ay);
            let b = Vec2::new(bx, by);
            prop_assert_eq!(euclidean_distance(a, b), euclidean_distance(b, a));
            prop_assert!(euclidean_distance(a, b) >= 0.0);
        }
    }
}
