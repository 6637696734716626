//! Object classification of consolidated vectors through the imported
//! linear head.

use serde_json::json;

use super::EvalReport;
use crate::classifiers::{head_logits, subset_softmax, topk_labels, LinearHead};
use crate::dataset::{FeatureStream, Frame};
use crate::error::{Error, Result};
use crate::map::{build_from_streams, CoverageLog, TopologicalMap};
use crate::params::{Hyperparameters, Variant};

/// Per-frame reference classifications plus which nodes covered each frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectEvalInputs {
    /// Top-1 class of each frame over the full head.
    pub frame_top1: Vec<usize>,
    /// Subset softmax of each frame's logits.
    pub frame_subset: Vec<Vec<f64>>,
    /// Frame indices covered by each node (node id order).
    pub coverage: Vec<Vec<usize>>,
}

impl ObjectEvalInputs {
    /// `frames` must be in presentation order, aligned with `log`.
    pub fn from_build(
        frames: &[&Frame],
        log: &CoverageLog,
        node_count: usize,
        head: &LinearHead,
        subset: &[usize],
    ) -> Result<Self> {
        if frames.len() != log.entries.len() {
            return Err(Error::Usage(format!(
                "coverage log has {} entries for {} frames",
                log.entries.len(),
                frames.len()
            )));
        }
        let mut frame_top1 = Vec::with_capacity(frames.len());
        let mut frame_subset = Vec::with_capacity(frames.len());
        for f in frames {
            let logits = head_logits(head, &f.features)?;
            frame_top1.push(topk_labels(&logits, 1)[0]);
            frame_subset.push(subset_softmax(&logits, subset)?);
        }
        Ok(Self {
            frame_top1,
            frame_subset,
            coverage: log.frames_per_node(node_count),
        })
    }
}

/// Fraction of (frame, covering node) pairs where the frame's top-1 class is
/// among the node's top-5 classes.
pub fn eval_object_top5(map: &TopologicalMap, inputs: &ObjectEvalInputs, head: &LinearHead) -> Result<f64> {
    let (hits, total) = top5_counts(map, inputs, head)?;
    if total == 0 {
        return Err(Error::Usage("no frame is covered by any node".into()));
    }
    Ok(hits as f64 / total as f64)
}

fn top5_counts(map: &TopologicalMap, inputs: &ObjectEvalInputs, head: &LinearHead) -> Result<(usize, usize)> {
    let mut hits = 0;
    let mut total = 0;
    for (node, frames) in map.nodes().iter().zip(&inputs.coverage) {
        if frames.is_empty() {
            continue;
        }
        let top5 = topk_labels(&head_logits(head, &node.c)?, 5);
        for &f in frames {
            total += 1;
            if top5.contains(&inputs.frame_top1[f]) {
                hits += 1;
            }
        }
    }
    Ok((hits, total))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrMean {
    pub err_mean: f64,
    /// Per-node `‖o_j − m_j‖₁ / b`, for nodes with coverage.
    pub per_node: Vec<f64>,
    pub excluded_nodes: usize,
}

/// Mean l1 gap between each node's subset classification and the average
/// subset classification of the frames it covered, normalized by subset
/// size, pooled over every node of every map.
pub fn eval_object_errmean(
    runs: &[(&TopologicalMap, &ObjectEvalInputs)],
    head: &LinearHead,
    subset: &[usize],
) -> Result<ErrMean> {
    let b = subset.len() as f64;
    let mut per_node = Vec::new();
    let mut excluded = 0;
    for (map, inputs) in runs {
        for (node, frames) in map.nodes().iter().zip(&inputs.coverage) {
            if frames.is_empty() {
                excluded += 1;
                log::warn!("node {} covered no frames; excluded from err_mean", node.id);
                continue;
            }
            let o = subset_softmax(&head_logits(head, &node.c)?, subset)?;
            let mut m = vec![0.0; subset.len()];
            for &f in frames {
                for (mi, &p) in m.iter_mut().zip(&inputs.frame_subset[f]) {
                    *mi += p;
                }
            }
            let inv = 1.0 / frames.len() as f64;
            let l1: f64 = o.iter().zip(&m).map(|(oi, mi)| (oi - mi * inv).abs()).sum();
            per_node.push(l1 / b);
        }
    }
    if per_node.is_empty() {
        return Err(Error::Usage("no node covered any frame".into()));
    }
    Ok(ErrMean {
        err_mean: per_node.iter().sum::<f64>() / per_node.len() as f64,
        per_node,
        excluded_nodes: excluded,
    })
}

/// One map per stream for each variant; reports pooled top-5 accuracy and
/// err_mean (per-node values, so the summary carries mean and std).
pub fn object_protocol(
    streams: &[FeatureStream],
    head: &LinearHead,
    subset: &[usize],
    params: Hyperparameters,
    variants: &[Variant],
    seed: u64,
) -> Result<EvalReport> {
    if streams.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut report = EvalReport::new(
        "objects",
        seed,
        streams.len(),
        json!({
            "hyperparameters": params,
            "variants": variants.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
            "subset": subset,
            "sequences": streams.iter().map(|s| s.sequence_id.clone()).collect::<Vec<_>>(),
        }),
    );
    for &variant in variants {
        let mut built = Vec::new();
        for s in streams {
            let (map, log) = build_from_streams(&[s], params, variant)?;
            let frames: Vec<&Frame> = s.frames.iter().collect();
            let inputs = ObjectEvalInputs::from_build(&frames, &log, map.len(), head, subset)?;
            built.push((map, inputs));
        }
        let mut hits = 0;
        let mut total = 0;
        for (map, inputs) in &built {
            let (h, t) = top5_counts(map, inputs, head)?;
            hits += h;
            total += t;
        }
        let runs: Vec<(&TopologicalMap, &ObjectEvalInputs)> = built.iter().map(|(m, i)| (m, i)).collect();
        let err = eval_object_errmean(&runs, head, subset)?;
        if err.excluded_nodes > 0 {
            report.warn(format!("{}: {} nodes without coverage excluded", variant.as_str(), err.excluded_nodes));
        }
        let v = variant.as_str();
        report.insert(format!("{v}.top5_accuracy"), vec![hits as f64 / total.max(1) as f64]);
        report.insert(format!("{v}.err_mean"), err.per_node);
    }
    Ok(report)
}
