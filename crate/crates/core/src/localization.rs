//! Image localization by relevance-weighted activation over map nodes.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::map::{MapNode, NodeId, TopologicalMap};
use crate::metrics::weighted_euclidean_unchecked;

/// A node ranked for a query vector. Ranks are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedLocation {
    pub node_id: NodeId,
    pub activation: f64,
    pub rank: usize,
}

/// Per-dimension relevance of a node from its average feature distances.
///
/// Dimensions with distances above the node's mean get weights below 0.5;
/// when all distances are equal every weight is 1.
pub fn relevance(delta: &[f32], s_slope: f64) -> Vec<f64> {
    let n = delta.len();
    if n == 0 {
        return Vec::new();
    }
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &d in delta {
        let d = f64::from(d);
        min = min.min(d);
        max = max.max(d);
        sum += d;
    }
    if min == max {
        return vec![1.0; n];
    }
    let mean = sum / n as f64;
    let scale = s_slope * (max - min);
    delta
        .iter()
        .map(|&d| 1.0 / (1.0 + ((f64::from(d) - mean) / scale).exp()))
        .collect()
}

fn activation_with(x: &[f32], c: &[f32], omega: &[f64], omega_l1: f64, epsilon: f64) -> f64 {
    let dist = weighted_euclidean_unchecked(x, c, omega);
    omega_l1 / (dist + omega_l1 + epsilon)
}

/// Activation of `node` for query `x`, in ]0,1[.
pub fn activation(x: &[f32], node: &MapNode, s_slope: f64, epsilon: f64) -> Result<f64> {
    check_dim(node.c.len(), x.len())?;
    let omega = relevance(&node.delta, s_slope);
    let l1 = omega.iter().sum();
    Ok(activation_with(x, &node.c, &omega, l1, epsilon))
}

fn rank(mut scored: Vec<(NodeId, f64)>, k: usize) -> Vec<RankedLocation> {
    // descending activation, ascending id on ties
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (node_id, activation))| RankedLocation {
            node_id,
            activation,
            rank: i + 1,
        })
        .collect()
}

fn check_query(map: &TopologicalMap, x: &[f32], k: usize) -> Result<()> {
    if map.is_empty() {
        return Err(Error::EmptyMap);
    }
    if k == 0 {
        return Err(Error::Usage("k must be at least 1".into()));
    }
    check_dim(map.feature_dim(), x.len())
}

/// The `k` most activated nodes for `x`; rank 1 is the estimated location.
pub fn localize(map: &TopologicalMap, x: &[f32], k: usize) -> Result<Vec<RankedLocation>> {
    check_query(map, x, k)?;
    let p = map.params();
    let scored = map
        .nodes()
        .iter()
        .map(|n| {
            let omega = relevance(&n.delta, p.s_slope);
            let l1 = omega.iter().sum();
            (n.id, activation_with(x, &n.c, &omega, l1, p.epsilon))
        })
        .collect();
    Ok(rank(scored, k))
}

/// Relevance vectors precomputed once for a finished map.
///
/// The cache borrows the map, so it cannot outlive a further build step.
#[derive(Debug)]
pub struct RelevanceCache<'a> {
    map: &'a TopologicalMap,
    omegas: Vec<Vec<f64>>,
    l1: Vec<f64>,
}

impl<'a> RelevanceCache<'a> {
    pub fn new(map: &'a TopologicalMap) -> Self {
        let s = map.params().s_slope;
        let omegas: Vec<Vec<f64>> = map.nodes().iter().map(|n| relevance(&n.delta, s)).collect();
        let l1 = omegas.iter().map(|w| w.iter().sum()).collect();
        Self { map, omegas, l1 }
    }

    pub fn localize(&self, x: &[f32], k: usize) -> Result<Vec<RankedLocation>> {
        check_query(self.map, x, k)?;
        let eps = self.map.params().epsilon;
        let scored = self
            .map
            .nodes()
            .iter()
            .map(|n| (n.id, activation_with(x, &n.c, &self.omegas[n.id], self.l1[n.id], eps)))
            .collect();
        Ok(rank(scored, k))
    }
}
