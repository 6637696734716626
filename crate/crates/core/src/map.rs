//! Incremental topological map building.
//!
//! Each observation (capture position + feature vector) is matched to the
//! spatially nearest node. Far observations spawn a node whose features
//! blend the last visited node's consolidated vector with the input; near
//! observations are consolidated by every node within `lambda`, subject to
//! the habituation gate on the squared distance to the node's last
//! consolidated vector.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureStream;
use crate::error::{check_dim, Error, Result};
use crate::metrics::{euclidean_distance, squared_euclidean_unchecked, Vec2};
use crate::params::{Hyperparameters, Variant};

pub type NodeId = usize;

/// One node of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapNode {
    pub id: NodeId,
    /// Node position, fixed at insertion.
    pub p: Vec2,
    /// Consolidated feature vector.
    pub c: Vec<f32>,
    /// Average feature distance vector, componentwise nonnegative.
    pub delta: Vec<f32>,
    /// Last feature vector consolidated by this node.
    pub u: Vec<f32>,
    /// Number of vectors folded into `c`, counting the initialization.
    pub consolidation_count: u64,
}

/// Undirected edge, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(pub NodeId, pub NodeId);

impl Edge {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0 == id || self.1 == id
    }
}

/// What happened on one build step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub winner_id: NodeId,
    pub inserted: bool,
    /// Nodes that took part in consolidation (within `lambda`), ascending.
    pub consolidating_ids: Vec<NodeId>,
    /// Subset of `consolidating_ids` whose habituation gate passed.
    pub updated_ids: Vec<NodeId>,
    pub new_edge: Option<Edge>,
}

/// Which nodes covered a given frame during the build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub sequence_id: String,
    pub frame_id: String,
    pub nodes: Vec<NodeId>,
}

/// Build provenance: one entry per presented frame, in presentation order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoverageLog {
    pub entries: Vec<CoverageEntry>,
}

impl CoverageLog {
    pub fn record(&mut self, sequence_id: &str, frame_id: &str, outcome: &StepOutcome) {
        self.entries.push(CoverageEntry {
            sequence_id: sequence_id.to_owned(),
            frame_id: frame_id.to_owned(),
            nodes: outcome.consolidating_ids.clone(),
        });
    }

    /// Frame indices (into `entries`) covered by each node.
    pub fn frames_per_node(&self, node_count: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); node_count];
        for (i, e) in self.entries.iter().enumerate() {
            for &n in &e.nodes {
                if n < node_count {
                    out[n].push(i);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologicalMap {
    nodes: Vec<MapNode>,
    edges: BTreeSet<Edge>,
    params: Hyperparameters,
    variant: Variant,
    feature_dim: usize,
    last_winner: Option<NodeId>,
}

impl TopologicalMap {
    pub fn new(feature_dim: usize, params: Hyperparameters) -> Result<Self> {
        Self::with_variant(feature_dim, params, Variant::Pm)
    }

    pub fn with_variant(feature_dim: usize, params: Hyperparameters, variant: Variant) -> Result<Self> {
        params.validate()?;
        if feature_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "feature_dim",
                reason: "must be at least 1".into(),
            });
        }
        Ok(Self {
            nodes: Vec::new(),
            edges: BTreeSet::new(),
            params,
            variant,
            feature_dim,
            last_winner: None,
        })
    }

    /// Reassemble a finalized map from stored parts. Node ids must equal
    /// their index.
    pub fn from_parts(
        feature_dim: usize,
        params: Hyperparameters,
        variant: Variant,
        nodes: Vec<MapNode>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self> {
        let mut map = Self::with_variant(feature_dim, params, variant)?;
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(Error::Usage(format!("node at index {i} has id {}", n.id)));
            }
            check_dim(feature_dim, n.c.len())?;
            check_dim(feature_dim, n.delta.len())?;
            check_dim(feature_dim, n.u.len())?;
        }
        map.nodes = nodes;
        for e in edges {
            let e = Edge::new(e.0, e.1);
            if e.0 == e.1 || e.1 >= map.nodes.len() {
                return Err(Error::Usage(format!("invalid edge {e:?}")));
            }
            map.edges.insert(e);
        }
        Ok(map)
    }

    pub fn nodes(&self) -> &[MapNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&MapNode> {
        self.nodes.get(id)
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edges.contains(&Edge::new(a, b))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn params(&self) -> &Hyperparameters {
        &self.params
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn last_winner(&self) -> Option<NodeId> {
        self.last_winner
    }

    /// Nearest node to `s`; ties go to the lowest id.
    pub fn find_winner(&self, s: Vec2) -> Option<(NodeId, f64)> {
        let mut best: Option<(NodeId, f64)> = None;
        for n in &self.nodes {
            let d = euclidean_distance(s, n.p);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((n.id, d));
            }
        }
        best
    }

    /// Ids of every node within `radius` of `s`, ascending.
    pub fn nodes_within(&self, s: Vec2, radius: f64) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| euclidean_distance(s, n.p) <= radius)
            .map(|n| n.id)
            .collect()
    }

    /// Insert a node at `s` initialized from `v`, blending in the last
    /// visited node's consolidated vector when there is one.
    pub fn insert_node(&mut self, s: Vec2, v: &[f32]) -> Result<NodeId> {
        check_dim(self.feature_dim, v.len())?;
        let id = self.nodes.len();
        let gamma = self.params.gamma;
        let c = match self.last_winner {
            Some(l) if self.variant.persistence() => self.nodes[l]
                .c
                .iter()
                .zip(v)
                .map(|(&cl, &vi)| (gamma * f64::from(cl) + (1.0 - gamma) * f64::from(vi)) as f32)
                .collect(),
            _ => v.to_vec(),
        };
        self.nodes.push(MapNode {
            id,
            p: s,
            c,
            delta: vec![0.0; self.feature_dim],
            u: v.to_vec(),
            consolidation_count: 1,
        });
        if let Some(l) = self.last_winner {
            self.edges.insert(Edge::new(l, id));
        }
        self.last_winner = Some(id);
        Ok(id)
    }

    /// Present one observation and update the map.
    pub fn process_observation(&mut self, s: Vec2, v: &[f32]) -> Result<StepOutcome> {
        if !s.is_finite() {
            return Err(Error::NonFinite("position"));
        }
        check_dim(self.feature_dim, v.len())?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("features"));
        }

        let previous = self.last_winner;
        let lambda = self.params.lambda;
        match self.find_winner(s) {
            Some((winner, dist)) if dist <= lambda => {
                let consolidating = self.nodes_within(s, lambda);
                let alpha = self.params.alpha;
                let beta = self.params.beta;
                let tau = self.variant.effective_tau(self.params.tau);
                let updated = consolidating
                    .iter()
                    .copied()
                    .filter(|&id| self.nodes[id].consolidate(v, alpha, beta, tau))
                    .collect();
                let new_edge = match previous {
                    Some(l) if l != winner => {
                        let e = Edge::new(l, winner);
                        self.edges.insert(e).then_some(e)
                    }
                    _ => None,
                };
                self.last_winner = Some(winner);
                Ok(StepOutcome {
                    winner_id: winner,
                    inserted: false,
                    consolidating_ids: consolidating,
                    updated_ids: updated,
                    new_edge,
                })
            }
            _ => {
                let id = self.insert_node(s, v)?;
                let new_edge = previous.map(|l| Edge::new(l, id));
                Ok(StepOutcome {
                    winner_id: id,
                    inserted: true,
                    consolidating_ids: vec![id],
                    updated_ids: Vec::new(),
                    new_edge,
                })
            }
        }
    }

    /// Mark the start of an independent sequence: no persistence source and
    /// no transition edge carries over from the previous one.
    pub fn begin_sequence(&mut self) {
        self.last_winner = None;
    }

    /// Forget the last winner; stored maps are kept in this state.
    pub fn finalize(&mut self) {
        self.last_winner = None;
    }
}

impl MapNode {
    fn consolidate(&mut self, v: &[f32], alpha: f64, beta: f64, tau: f64) -> bool {
        if !habituation_gate(v, &self.u, tau) {
            return false;
        }
        // delta first: it reads the pre-update c
        apply_delta_update(self, v, alpha, beta);
        apply_feature_update(self, v, alpha);
        self.u.copy_from_slice(v);
        self.consolidation_count += 1;
        true
    }
}

fn habituation_gate(v: &[f32], u: &[f32], tau: f64) -> bool {
    squared_euclidean_unchecked(v, u) >= tau
}

fn apply_feature_update(node: &mut MapNode, v: &[f32], alpha: f64) {
    for (c, &vi) in node.c.iter_mut().zip(v) {
        let cf = f64::from(*c);
        *c = (cf + alpha * (f64::from(vi) - cf)) as f32;
    }
}

fn apply_delta_update(node: &mut MapNode, v: &[f32], alpha: f64, beta: f64) {
    let rate = alpha * beta;
    for ((d, &c), &vi) in node.delta.iter_mut().zip(&node.c).zip(v) {
        let phi = (f64::from(vi) - f64::from(c)).abs();
        let df = f64::from(*d);
        *d = (df + rate * (phi - df)) as f32;
    }
}

/// Moving-average update of `c` toward `v`, gated on `‖v − u‖² ≥ tau`.
/// Leaves `u` untouched.
pub fn consolidate_features(node: &mut MapNode, v: &[f32], alpha: f64, tau: f64) -> Result<bool> {
    check_dim(node.c.len(), v.len())?;
    if !habituation_gate(v, &node.u, tau) {
        return Ok(false);
    }
    apply_feature_update(node, v, alpha);
    Ok(true)
}

/// Moving-average update of `delta` toward `|v − c|`, same gate as
/// [`consolidate_features`]. Must run before `c` is updated for the step.
pub fn update_delta(node: &mut MapNode, v: &[f32], alpha: f64, beta: f64, tau: f64) -> Result<bool> {
    check_dim(node.c.len(), v.len())?;
    if !habituation_gate(v, &node.u, tau) {
        return Ok(false);
    }
    apply_delta_update(node, v, alpha, beta);
    Ok(true)
}

/// Build one map from `streams` presented in order, each as an independent
/// sequence. Returns the finalized map and the per-frame coverage log.
pub fn build_from_streams(
    streams: &[&FeatureStream],
    params: Hyperparameters,
    variant: Variant,
) -> Result<(TopologicalMap, CoverageLog)> {
    let first = streams
        .iter()
        .find(|s| !s.is_empty())
        .ok_or(Error::EmptyInput)?;
    let mut map = TopologicalMap::with_variant(first.feature_dim, params, variant)?;
    let mut log = CoverageLog::default();
    for stream in streams {
        extend_with_stream(&mut map, &mut log, stream)?;
    }
    map.finalize();
    Ok((map, log))
}

/// Present one more sequence to an existing map.
pub fn extend_with_stream(map: &mut TopologicalMap, log: &mut CoverageLog, stream: &FeatureStream) -> Result<()> {
    check_dim(map.feature_dim(), stream.feature_dim)?;
    map.begin_sequence();
    for frame in &stream.frames {
        let out = map.process_observation(frame.position, &frame.features)?;
        log.record(&stream.sequence_id, &frame.frame_id, &out);
    }
    Ok(())
}
