//! Image localization against a map built from replicated sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{derive_seed, EvalReport};
use crate::dataset::{replicate_frames, FeatureStream};
use crate::error::{Error, Result};
use crate::localization::RelevanceCache;
use crate::map::build_from_streams;
use crate::metrics::euclidean_distance;
use crate::params::{Hyperparameters, Variant};

/// Replicate `fraction` of the frames of each build sequence `copies` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub fraction: f64,
    pub copies: usize,
}

impl Replication {
    pub const NONE: Replication = Replication { fraction: 0.0, copies: 0 };
}

impl Default for Replication {
    fn default() -> Self {
        Self::NONE
    }
}

impl fmt::Display for Replication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.fraction, self.copies)
    }
}

impl FromStr for Replication {
    type Err = Error;

    /// Parses `FRAC:COPIES`, e.g. `0.1:40`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("expected FRAC:COPIES, got {s:?}"));
        let (frac, copies) = s.split_once(':').ok_or_else(bad)?;
        let fraction: f64 = frac.trim().parse().map_err(|_| bad())?;
        let copies: usize = copies.trim().parse().map_err(|_| bad())?;
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidParameter {
                name: "replicate",
                reason: format!("fraction {fraction} outside [0, 1]"),
            });
        }
        Ok(Self { fraction, copies })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationScore {
    pub top1: f64,
    pub top5: f64,
    pub queries: usize,
    /// Queries with no node within λ of their capture position.
    pub misses: usize,
}

/// Build one map from the (replicated) build sequences and localize every
/// frame of `query`. A query is a TOP-k hit when any of its k best nodes
/// lies within λ of the query's capture position.
pub fn eval_localization(
    build: &[FeatureStream],
    query: &FeatureStream,
    params: Hyperparameters,
    replication: Replication,
    variant: Variant,
    seed: u64,
) -> Result<LocalizationScore> {
    if build.is_empty() {
        return Err(Error::Usage("localization needs at least one build sequence".into()));
    }
    if query.is_empty() {
        return Err(Error::EmptyInput);
    }
    let replicated: Vec<FeatureStream> = build
        .iter()
        .enumerate()
        .map(|(i, s)| replicate_frames(s, replication.fraction, replication.copies, derive_seed(seed, i)))
        .collect();
    let refs: Vec<&FeatureStream> = replicated.iter().collect();
    let (map, _) = build_from_streams(&refs, params, variant)?;
    let cache = RelevanceCache::new(&map);
    let lambda = map.params().lambda;

    let (mut hit1, mut hit5, mut misses) = (0usize, 0usize, 0usize);
    for frame in &query.frames {
        let truth: Vec<usize> = map
            .nodes()
            .iter()
            .filter(|n| euclidean_distance(n.p, frame.position) <= lambda)
            .map(|n| n.id)
            .collect();
        if truth.is_empty() {
            misses += 1;
            log::info!("query {} has no node within {lambda}; counted as miss", frame.frame_id);
            continue;
        }
        let ranked = cache.localize(&frame.features, 5)?;
        if truth.contains(&ranked[0].node_id) {
            hit1 += 1;
        }
        if ranked.iter().any(|r| truth.contains(&r.node_id)) {
            hit5 += 1;
        }
    }
    let n = query.len() as f64;
    Ok(LocalizationScore {
        top1: hit1 as f64 / n,
        top5: hit5 as f64 / n,
        queries: query.len(),
        misses,
    })
}

/// Each sequence in turn is the query; the others build the map. Reports
/// `{variant}.top1` and `{variant}.top5` over folds.
pub fn localization_crossval(
    sequences: &[FeatureStream],
    params: Hyperparameters,
    replication: Replication,
    variants: &[Variant],
    seed: u64,
) -> Result<EvalReport> {
    if sequences.len() < 2 {
        return Err(Error::Usage("localization cross-validation needs at least two sequences".into()));
    }
    let mut report = EvalReport::new(
        "localization",
        seed,
        sequences.len(),
        json!({
            "hyperparameters": params,
            "replication": replication,
            "variants": variants.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
            "sequences": sequences.iter().map(|s| s.sequence_id.clone()).collect::<Vec<_>>(),
        }),
    );
    for &variant in variants {
        let mut top1 = Vec::new();
        let mut top5 = Vec::new();
        let mut misses = 0;
        for (fold, query) in sequences.iter().enumerate() {
            let build: Vec<FeatureStream> = sequences
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != fold)
                .map(|(_, s)| s.clone())
                .collect();
            let score = eval_localization(&build, query, params, replication, variant, derive_seed(seed, fold))?;
            top1.push(score.top1);
            top5.push(score.top5);
            misses += score.misses;
        }
        if misses > 0 {
            report.warn(format!("{}: {misses} queries had no node within lambda", variant.as_str()));
        }
        report.insert(format!("{}.top1", variant.as_str()), top1);
        report.insert(format!("{}.top5", variant.as_str()), top5);
    }
    Ok(report)
}
