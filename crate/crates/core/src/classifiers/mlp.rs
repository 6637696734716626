//! One-hidden-layer ReLU perceptron trained full-batch with Adam on
//! softmax cross-entropy.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::softmax;
use crate::codec::{Bundle, BundleWriter};
use crate::error::{check_dim, Error, Result};

const KIND: &str = "mlp-model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub rng_seed: u64,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
}

fn default_hidden() -> usize {
    20
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            rng_seed: 0,
            hidden: default_hidden(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate", "must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta", "Adam betas must lie in [0,1[");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps", "must be positive");
        }
        if self.hidden == 0 {
            return bad("hidden", "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    in_dim: usize,
    hidden: usize,
    /// `hidden × in_dim`, row-major.
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// `classes × hidden`, row-major.
    w2: Vec<f64>,
    b2: Vec<f64>,
    class_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub probabilities: Vec<f64>,
}

impl MlpModel {
    /// Build a model from explicit parameters.
    pub fn from_parameters(
        in_dim: usize,
        hidden: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let k = class_names.len();
        check_dim(hidden * in_dim, w1.len())?;
        check_dim(hidden, b1.len())?;
        check_dim(k * hidden, w2.len())?;
        check_dim(k, b2.len())?;
        if k == 0 {
            return Err(Error::Usage("model needs at least one class".into()));
        }
        let model = Self {
            in_dim,
            hidden,
            w1,
            b1,
            w2,
            b2,
            class_names,
        };
        if model.parameters().iter().any(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(model)
    }

    /// Glorot-uniform weights, zero biases.
    fn initialized(in_dim: usize, hidden: usize, class_names: Vec<String>, rng: &mut ChaCha8Rng) -> Self {
        let k = class_names.len();
        let mut glorot = |fan_in: usize, fan_out: usize| -> Vec<f64> {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_in * fan_out).map(|_| rng.random_range(-limit..=limit)).collect()
        };
        let w1 = glorot(in_dim, hidden);
        let w2 = glorot(hidden, k);
        Self {
            in_dim,
            hidden,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; k],
            class_names,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Parameter blocks in a fixed order: w1, b1, w2, b2.
    pub fn parameters(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn parameters_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    /// Hidden pre-activations and output logits for one input.
    fn forward(&self, x: &[f32]) -> (Vec<f64>, Vec<f64>) {
        let pre: Vec<f64> = self
            .w1
            .chunks_exact(self.in_dim)
            .zip(&self.b1)
            .map(|(row, &b)| row.iter().zip(x).map(|(&w, &xi)| w * f64::from(xi)).sum::<f64>() + b)
            .collect();
        let logits = self
            .w2
            .chunks_exact(self.hidden)
            .zip(&self.b2)
            .map(|(row, &b)| row.iter().zip(&pre).map(|(&w, &h)| w * h.max(0.0)).sum::<f64>() + b)
            .collect();
        (pre, logits)
    }

    pub fn logits(&self, x: &[f32]) -> Result<Vec<f64>> {
        check_dim(self.in_dim, x.len())?;
        Ok(self.forward(x).1)
    }
}

/// Argmax class and the full probability vector.
pub fn mlp_predict(model: &MlpModel, c: &[f32]) -> Result<Prediction> {
    let probabilities = softmax(&model.logits(c)?);
    let class = probabilities
        .iter()
        .enumerate()
        .fold(0, |best, (i, &p)| if p > probabilities[best] { i } else { best });
    Ok(Prediction { class, probabilities })
}

/// Mean cross-entropy over the batch and its gradient, laid out like
/// [`MlpModel::parameters`].
pub fn loss_and_gradients(model: &MlpModel, xs: &[&[f32]], ys: &[usize]) -> (f64, [Vec<f64>; 4]) {
    let (h, k, m) = (model.hidden, model.n_classes(), model.in_dim);
    let mut g = [vec![0.0; h * m], vec![0.0; h], vec![0.0; k * h], vec![0.0; k]];
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut d_hidden = vec![0.0; h];
    for (x, &y) in xs.iter().zip(ys) {
        let (pre, logits) = model.forward(x);
        let probs = softmax(&logits);
        loss -= probs[y].max(f64::MIN_POSITIVE).ln();
        d_hidden.iter_mut().for_each(|d| *d = 0.0);
        for c in 0..k {
            let dz = (probs[c] - if c == y { 1.0 } else { 0.0 }) / n;
            g[3][c] += dz;
            let row = &model.w2[c * h..(c + 1) * h];
            for j in 0..h {
                g[2][c * h + j] += dz * pre[j].max(0.0);
                d_hidden[j] += dz * row[j];
            }
        }
        for j in 0..h {
            if pre[j] <= 0.0 {
                continue;
            }
            let dp = d_hidden[j];
            g[1][j] += dp;
            for (gw, &xi) in g[0][j * m..(j + 1) * m].iter_mut().zip(x.iter()) {
                *gw += dp * f64::from(xi);
            }
        }
    }
    (loss / n, g)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Full-batch loss before each epoch's update, then the final loss.
    pub loss_history: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Train on `features` with integer `labels` indexing `class_names`.
pub fn mlp_train(
    features: &[&[f32]],
    labels: &[usize],
    class_names: Vec<String>,
    config: &TrainConfig,
) -> Result<MlpModel> {
    mlp_train_detailed(features, labels, class_names, config).map(|o| o.model)
}

pub fn mlp_train_detailed(
    features: &[&[f32]],
    labels: &[usize],
    class_names: Vec<String>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if features.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_dim(features.len(), labels.len())?;
    let in_dim = features[0].len();
    for x in features {
        check_dim(in_dim, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training features"));
        }
    }
    let k = class_names.len();
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::Usage(format!("label {bad} out of range for {k} classes")));
    }

    let mut warnings = Vec::new();
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&y| counts[y] += 1);
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        warnings.push("degenerate training set: fewer than two classes present".to_owned());
    }
    for (name, _) in class_names.iter().zip(&counts).filter(|(_, &c)| c == 0) {
        warnings.push(format!("class {name:?} has no training examples"));
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut model = MlpModel::initialized(in_dim, config.hidden, class_names, &mut rng);
    let sizes = model.parameters().map(<[f64]>::len);
    let mut m1: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
    let mut m2 = m1.clone();
    let mut history = Vec::with_capacity(config.epochs + 1);
    for t in 1..=config.epochs {
        let (loss, grads) = loss_and_gradients(&model, features, labels);
        history.push(loss);
        let bc1 = 1.0 - config.beta1.powi(t as i32);
        let bc2 = 1.0 - config.beta2.powi(t as i32);
        for (((params, grad), mom), vel) in model.parameters_mut().into_iter().zip(&grads).zip(&mut m1).zip(&mut m2) {
            for i in 0..params.len() {
                mom[i] = config.beta1 * mom[i] + (1.0 - config.beta1) * grad[i];
                vel[i] = config.beta2 * vel[i] + (1.0 - config.beta2) * grad[i] * grad[i];
                let step = (mom[i] / bc1) / ((vel[i] / bc2).sqrt() + config.adam_eps);
                params[i] -= config.learning_rate * step;
            }
        }
    }
    history.push(loss_and_gradients(&model, features, labels).0);
    Ok(TrainOutcome {
        model,
        loss_history: history,
        warnings,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct MlpManifest {
    in_dim: usize,
    hidden: usize,
    n_classes: usize,
    class_names: Vec<String>,
}

/// Parameters are stored as 64-bit blobs so a reloaded model predicts
/// exactly like the trained one.
pub fn save_mlp(model: &MlpModel, dir: impl AsRef<Path>) -> Result<()> {
    let (m, h, k) = (model.in_dim, model.hidden, model.n_classes());
    let mut w = BundleWriter::new(dir, KIND);
    w.add_f64("w1", h, m, model.w1.iter().copied());
    w.add_f64("b1", h, 1, model.b1.iter().copied());
    w.add_f64("w2", k, h, model.w2.iter().copied());
    w.add_f64("b2", k, 1, model.b2.iter().copied());
    w.finish(MlpManifest {
        in_dim: m,
        hidden: h,
        n_classes: k,
        class_names: model.class_names.clone(),
    })
}

pub fn load_mlp(dir: impl AsRef<Path>) -> Result<MlpModel> {
    let bundle: Bundle<MlpManifest> = Bundle::open(dir.as_ref(), KIND)?;
    let b = &bundle.body;
    check_dim(b.n_classes, b.class_names.len())?;
    MlpModel::from_parameters(
        b.in_dim,
        b.hidden,
        bundle.read_f64("w1", b.hidden, b.in_dim)?,
        bundle.read_f64("b1", b.hidden, 1)?,
        bundle.read_f64("w2", b.n_classes, b.hidden)?,
        bundle.read_f64("b2", b.n_classes, 1)?,
        b.class_names.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::snapshot;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn blobs(seed: u64, per_class: usize) -> (Vec<Vec<f32>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (label, center) in [(0usize, [-2.0, -2.0]), (1, [2.0, 2.0])] {
            for _ in 0..per_class {
                xs.push(vec![
                    (center[0] + noise.sample(&mut rng)) as f32,
                    (center[1] + noise.sample(&mut rng)) as f32,
                ]);
                ys.push(label);
            }
        }
        (xs, ys)
    }

    fn refs(xs: &[Vec<f32>]) -> Vec<&[f32]> {
        xs.iter().map(Vec::as_slice).collect()
    }

    fn two_names() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let (xs, ys) = blobs(4, 50);
        let model = mlp_train(&refs(&xs), &ys, two_names(), &TrainConfig::default()).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(mlp_predict(&model, x).unwrap().class, y);
        }
    }

    #[test]
    fn rejects_zero_epochs() {
        let (xs, ys) = blobs(0, 3);
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        assert!(matches!(
            mlp_train(&refs(&xs), &ys, two_names(), &cfg),
            Err(Error::InvalidParameter { name: "epochs", .. })
        ));
    }

    #[test]
    fn one_epoch_is_one_adam_step() {
        let (xs, ys) = blobs(1, 5);
        let cfg = TrainConfig { epochs: 1, ..Default::default() };
        let out = mlp_train_detailed(&refs(&xs), &ys, two_names(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let init = MlpModel::initialized(2, 20, two_names(), &mut rng);
        let (_, grads) = loss_and_gradients(&init, &refs(&xs), &ys);
        // first bias-corrected Adam step moves each parameter by lr·g/(|g|+eps)
        for ((after, before), g) in out.model.parameters().iter().zip(init.parameters()).zip(&grads) {
            for i in 0..g.len() {
                let expected = before[i] - cfg.learning_rate * g[i] / (g[i].abs() + cfg.adam_eps);
                assert!((after[i] - expected).abs() < 1e-12);
            }
        }
        assert_eq!(out.loss_history.len(), 2);
    }

    #[test]
    fn seeded_training_is_bitwise_reproducible() {
        let (xs, ys) = blobs(2, 10);
        let cfg = TrainConfig { epochs: 20, rng_seed: 9, ..Default::default() };
        let a = mlp_train(&refs(&xs), &ys, two_names(), &cfg).unwrap();
        let b = mlp_train(&refs(&xs), &ys, two_names(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_trains_with_warning() {
        let xs = vec![vec![1.0f32, 2.0], vec![0.5, 0.5]];
        let out = mlp_train_detailed(&refs(&xs), &[0, 0], vec!["only".into()], &TrainConfig::default()).unwrap();
        assert!(!out.warnings.is_empty());
        assert_eq!(mlp_predict(&out.model, &xs[0]).unwrap().class, 0);
    }

    #[test]
    fn predict_from_bias_alone() {
        let model = MlpModel::from_parameters(
            2,
            1,
            vec![0.3, -0.1],
            vec![0.0],
            vec![0.0; 3],
            vec![0.0, 0.5, 4.0],
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap();
        for x in [[0.0f32, 0.0], [100.0, -3.0]] {
            let p = mlp_predict(&model, &x).unwrap();
            assert_eq!(p.class, 2);
            assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(matches!(mlp_predict(&model, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let m = 6;
        let xs: Vec<Vec<f32>> = (0..5).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ys = vec![0, 1, 2, 1, 0];
        let mut model = MlpModel::initialized(m, 4, vec!["a".into(), "b".into(), "c".into()], &mut rng);
        model.b1.iter_mut().for_each(|b| *b = rng.random_range(-0.2..0.2));
        let (_, grads) = loss_and_gradients(&model, &refs(&xs), &ys);
        let h = 1e-4;
        for block in 0..4 {
            for i in 0..grads[block].len() {
                let mut plus = model.clone();
                plus.parameters_mut()[block][i] += h;
                let mut minus = model.clone();
                minus.parameters_mut()[block][i] -= h;
                let fd = (loss_and_gradients(&plus, &refs(&xs), &ys).0
                    - loss_and_gradients(&minus, &refs(&xs), &ys).0)
                    / (2.0 * h);
                let g = grads[block][i];
                let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-8);
                assert!(rel < 1e-4 || (g - fd).abs() < 1e-9, "block {block} idx {i}: {g} vs {fd}");
            }
        }
    }

    #[test]
    fn model_round_trip() {
        let (xs, ys) = blobs(3, 10);
        let cfg = TrainConfig { epochs: 5, ..Default::default() };
        let model = mlp_train(&refs(&xs), &ys, two_names(), &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        save_mlp(&model, &a).unwrap();
        let loaded = load_mlp(&a).unwrap();
        assert_eq!(loaded, model);
        save_mlp(&loaded, &b).unwrap();
        assert_eq!(snapshot(&a).unwrap(), snapshot(&b).unwrap());
        let blob = a.join("w2.f64");
        let bytes = std::fs::read(&blob).unwrap();
        std::fs::write(&blob, &bytes[..8]).unwrap();
        assert!(matches!(load_mlp(&a), Err(Error::Checksum { .. })));
    }
}
