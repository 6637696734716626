//! Place-category protocols: sequence-wise cross-validation and
//! classification over time on a growing map.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{derive_seed, EvalReport};
use crate::classifiers::{mlp_predict, mlp_train, MlpModel, TrainConfig};
use crate::dataset::{FeatureStream, SynthConfig};
use crate::error::{Error, Result};
use crate::map::{extend_with_stream, CoverageLog, TopologicalMap};
use crate::params::{Hyperparameters, Variant};

/// Union of label names over several streams, in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    pub names: Vec<String>,
}

impl LabelSpace {
    pub fn from_streams<'a>(streams: impl IntoIterator<Item = &'a FeatureStream>) -> Self {
        let mut names: Vec<String> = Vec::new();
        for s in streams {
            for n in &s.label_names {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        }
        Self { names }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Global id of a stream-local label.
    pub fn global(&self, stream: &FeatureStream, local: u32) -> Option<usize> {
        stream.label_name(local).and_then(|n| self.index_of(n))
    }

    fn frame_labels(&self, stream: &FeatureStream) -> Vec<Option<usize>> {
        stream
            .frames
            .iter()
            .map(|f| f.label.and_then(|l| self.global(stream, l)))
            .collect()
    }
}

/// How the true category of a map node is determined.
#[derive(Debug, Clone)]
pub enum NodeTruth {
    /// Category of the room containing the node position.
    Regions(SynthConfig),
    /// Most frequent label among the frames the node covered; ties go to
    /// the lowest label id.
    MajorityVote,
}

fn node_truths(
    map: &TopologicalMap,
    log: &CoverageLog,
    log_labels: &[Option<usize>],
    truth: &NodeTruth,
    space: &LabelSpace,
) -> Vec<Option<usize>> {
    match truth {
        NodeTruth::Regions(cfg) => map
            .nodes()
            .iter()
            .map(|n| {
                let cat = cfg.category_at(n.p) as usize;
                cfg.label_names.get(cat).and_then(|name| space.index_of(name))
            })
            .collect(),
        NodeTruth::MajorityVote => log
            .frames_per_node(map.len())
            .iter()
            .map(|frames| {
                let mut votes = vec![0usize; space.names.len()];
                for &f in frames {
                    if let Some(l) = log_labels[f] {
                        votes[l] += 1;
                    }
                }
                let best = votes
                    .iter()
                    .enumerate()
                    .fold(None, |best: Option<(usize, usize)>, (l, &c)| match best {
                        _ if c == 0 => best,
                        Some((_, bc)) if bc >= c => best,
                        _ => Some((l, c)),
                    });
                best.map(|(l, _)| l)
            })
            .collect(),
    }
}

#[derive(Debug, Default)]
struct Tally {
    per_category: BTreeMap<usize, (usize, usize)>,
}

impl Tally {
    fn add(&mut self, truth: usize, predicted: usize) {
        let e = self.per_category.entry(truth).or_default();
        e.1 += 1;
        if truth == predicted {
            e.0 += 1;
        }
    }

    fn overall(&self) -> Option<f64> {
        let (c, t) = self
            .per_category
            .values()
            .fold((0, 0), |(c, t), &(ci, ti)| (c + ci, t + ti));
        (t > 0).then(|| c as f64 / t as f64)
    }
}

fn train_on(streams: &[&FeatureStream], space: &LabelSpace, config: &TrainConfig) -> Result<(MlpModel, Vec<bool>)> {
    let mut xs: Vec<&[f32]> = Vec::new();
    let mut ys = Vec::new();
    for s in streams {
        for (f, l) in s.frames.iter().zip(space.frame_labels(s)) {
            if let Some(l) = l {
                xs.push(&f.features);
                ys.push(l);
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::Usage("no labeled training frames".into()));
    }
    let mut present = vec![false; space.names.len()];
    ys.iter().for_each(|&y| present[y] = true);
    let model = mlp_train(&xs, &ys, space.names.clone(), config)?;
    Ok((model, present))
}

fn classify_nodes(
    map: &TopologicalMap,
    truths: &[Option<usize>],
    model: &MlpModel,
    tally: &mut Tally,
) -> Result<()> {
    for (node, truth) in map.nodes().iter().zip(truths) {
        if let Some(t) = *truth {
            tally.add(t, mlp_predict(model, &node.c)?.class);
        }
    }
    Ok(())
}

fn record_tallies(report: &mut EvalReport, prefix: &str, tallies: &[Tally], space: &LabelSpace) {
    report.insert(
        format!("{prefix}.overall"),
        tallies.iter().filter_map(Tally::overall).collect(),
    );
    for (id, name) in space.names.iter().enumerate() {
        let values: Vec<f64> = tallies
            .iter()
            .filter_map(|t| t.per_category.get(&id))
            .map(|&(c, n)| c as f64 / n as f64)
            .collect();
        if !values.is_empty() {
            report.insert(format!("{prefix}.category.{name}"), values);
        }
    }
}

/// Leave-one-sequence-out place classification. Each fold trains the MLP on
/// every frame of the other sequences, builds a map from the held-out one
/// and classifies its nodes (`pm.*` metrics); the same MLP also classifies
/// the held-out frames directly (`images.*` metrics).
pub fn crossval_place(
    sequences: &[FeatureStream],
    mlp_config: &TrainConfig,
    params: Hyperparameters,
    variant: Variant,
    truth: &NodeTruth,
    seed: u64,
) -> Result<EvalReport> {
    if sequences.len() < 2 {
        return Err(Error::Usage("cross-validation needs at least two sequences".into()));
    }
    let space = LabelSpace::from_streams(sequences);
    let mut report = EvalReport::new(
        "crossval-place",
        seed,
        sequences.len(),
        json!({
            "hyperparameters": params,
            "variant": variant.as_str(),
            "mlp": mlp_config,
            "sequences": sequences.iter().map(|s| s.sequence_id.clone()).collect::<Vec<_>>(),
            "labels": space.names,
            "node_truth": match truth { NodeTruth::Regions(_) => "regions", NodeTruth::MajorityVote => "majority-vote" },
        }),
    );
    let mut pm = Vec::new();
    let mut images = Vec::new();
    for (fold, held_out) in sequences.iter().enumerate() {
        let train: Vec<&FeatureStream> = sequences
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != fold)
            .map(|(_, s)| s)
            .collect();
        let cfg = TrainConfig {
            rng_seed: derive_seed(seed, fold),
            ..mlp_config.clone()
        };
        let (model, present) = train_on(&train, &space, &cfg)?;

        let mut map = TopologicalMap::with_variant(held_out.feature_dim, params, variant)?;
        let mut log = CoverageLog::default();
        extend_with_stream(&mut map, &mut log, held_out)?;
        let labels = space.frame_labels(held_out);
        let truths = node_truths(&map, &log, &labels, truth, &space);

        let unseen: Vec<&str> = truths
            .iter()
            .chain(&labels)
            .flatten()
            .filter(|&&t| !present[t])
            .map(|&t| space.names[t].as_str())
            .collect();
        if !unseen.is_empty() {
            report.warn(format!(
                "fold {fold} ({}) skipped: categories {unseen:?} absent from training",
                held_out.sequence_id
            ));
            continue;
        }

        let mut t_pm = Tally::default();
        classify_nodes(&map, &truths, &model, &mut t_pm)?;
        let mut t_img = Tally::default();
        for (f, l) in held_out.frames.iter().zip(&labels) {
            if let Some(l) = *l {
                t_img.add(l, mlp_predict(&model, &f.features)?.class);
            }
        }
        pm.push(t_pm);
        images.push(t_img);
    }
    if pm.is_empty() {
        return Err(Error::Usage("every fold was skipped".into()));
    }
    record_tallies(&mut report, "pm", &pm, &space);
    record_tallies(&mut report, "images", &images, &space);
    Ok(report)
}

/// Train once on `train_sequence`, then grow one map from `map_sequences`
/// in a shuffled order, classifying every node after each sequence. Yields
/// `accuracy.instant.NN` for each of the `map_sequences.len()` instants.
#[allow(clippy::too_many_arguments)]
pub fn eval_over_time(
    train_sequence: &FeatureStream,
    map_sequences: &[FeatureStream],
    mlp_config: &TrainConfig,
    params: Hyperparameters,
    variant: Variant,
    truth: &NodeTruth,
    repetitions: usize,
    seed: u64,
) -> Result<EvalReport> {
    if map_sequences.is_empty() {
        return Err(Error::EmptyInput);
    }
    let repetitions = repetitions.max(1);
    let space = LabelSpace::from_streams(std::iter::once(train_sequence).chain(map_sequences));
    let (model, present) = train_on(&[train_sequence], &space, mlp_config)?;
    let mut report = EvalReport::new(
        "over-time",
        seed,
        repetitions,
        json!({
            "hyperparameters": params,
            "variant": variant.as_str(),
            "mlp": mlp_config,
            "train_sequence": train_sequence.sequence_id,
            "map_sequences": map_sequences.iter().map(|s| s.sequence_id.clone()).collect::<Vec<_>>(),
        }),
    );
    let instants = map_sequences.len();
    let mut per_instant: Vec<Vec<f64>> = vec![Vec::new(); instants];
    for rep in 0..repetitions {
        let mut order: Vec<usize> = (0..instants).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, rep)));
        let mut map = TopologicalMap::with_variant(map_sequences[0].feature_dim, params, variant)?;
        let mut log = CoverageLog::default();
        let mut labels = Vec::new();
        for (t, &i) in order.iter().enumerate() {
            let s = &map_sequences[i];
            extend_with_stream(&mut map, &mut log, s)?;
            labels.extend(space.frame_labels(s));
            let truths = node_truths(&map, &log, &labels, truth, &space);
            if truths.iter().flatten().any(|&c| !present[c]) {
                report.warn(format!("repetition {rep}: map holds categories absent from training"));
            }
            let mut tally = Tally::default();
            classify_nodes(&map, &truths, &model, &mut tally)?;
            if let Some(acc) = tally.overall() {
                per_instant[t].push(acc);
            }
        }
    }
    for (t, values) in per_instant.into_iter().enumerate() {
        report.insert(format!("accuracy.instant.{:02}", t + 1), values);
    }
    Ok(report)
}
