//! Semantic properties from consolidated vectors: object labels through an
//! imported linear head and place categories through a shallow MLP.

mod head;
mod mlp;

pub use head::{
    head_logits, load_head, load_subset_names, resolve_subset, save_head, subset_softmax, topk_labels,
    LinearHead, DEFAULT_OBJECT_CLASSES,
};
pub use mlp::{
    load_mlp, loss_and_gradients, mlp_predict, mlp_train, mlp_train_detailed, save_mlp, MlpModel,
    Prediction, TrainConfig, TrainOutcome,
};

/// Numerically stable softmax of `logits`.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
