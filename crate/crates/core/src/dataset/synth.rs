//! Synthetic indoor environments: axis-aligned rooms, each with a place
//! category and a Gaussian feature cluster, walked along a waypoint path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FeatureStream, Frame};
use crate::error::{Error, Result};
use crate::metrics::Vec2;

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        let dx = (self.x0 - p.x).max(0.0).max(p.x - self.x1);
        let dy = (self.y0 - p.y).max(0.0).max(p.y - self.y1);
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub rect: Rect,
    pub category: u32,
    /// Cluster center; when empty, one is drawn from N(0, center_scale²).
    #[serde(default)]
    pub center: Vec<f32>,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub feature_dim: usize,
    pub label_names: Vec<String>,
    pub rooms: Vec<Room>,
    pub waypoints: Vec<Vec2>,
    /// Distance between consecutive frames along the path, in meters.
    pub step_length: f64,
    /// Standard deviation of the Gaussian noise added to capture positions.
    pub position_noise: f64,
    /// Number of independent runs over the path.
    #[serde(default = "one")]
    pub sequences: usize,
    #[serde(default = "unit")]
    pub center_scale: f64,
    /// Amplitude of a smooth position-dependent feature component shared
    /// by all runs; zero gives pure per-room clusters.
    #[serde(default)]
    pub spatial_variation: f64,
    /// Length scale of that component, in meters.
    #[serde(default = "unit")]
    pub spatial_length_scale: f64,
    pub rng_seed: u64,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::Config(reason));
        if self.feature_dim == 0 {
            return bad("feature_dim must be at least 1".into());
        }
        if self.rooms.is_empty() || self.waypoints.is_empty() {
            return bad("need at least one room and one waypoint".into());
        }
        if !(self.step_length > 0.0) {
            return bad(format!("step_length must be positive, got {}", self.step_length));
        }
        if !(self.position_noise >= 0.0) || !(self.center_scale >= 0.0) || !(self.spatial_variation >= 0.0) {
            return bad("noise, scales and stddevs must be nonnegative".into());
        }
        if !(self.spatial_length_scale > 0.0) {
            return bad("spatial_length_scale must be positive".into());
        }
        for (i, r) in self.rooms.iter().enumerate() {
            if !(r.stddev >= 0.0) {
                return bad(format!("room {i}: stddev must be nonnegative"));
            }
            if r.category as usize >= self.label_names.len() {
                return bad(format!("room {i}: category {} has no label name", r.category));
            }
            if !r.center.is_empty() && r.center.len() != self.feature_dim {
                return bad(format!("room {i}: center has {} components", r.center.len()));
            }
            if !(r.rect.x0 <= r.rect.x1 && r.rect.y0 <= r.rect.y1) {
                return bad(format!("room {i}: degenerate rectangle"));
            }
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if self.room_index(*w).is_none() {
                return bad(format!("waypoint {i} ({}, {}) lies outside all rooms", w.x, w.y));
            }
        }
        Ok(())
    }

    fn room_index(&self, p: Vec2) -> Option<usize> {
        self.rooms.iter().position(|r| r.rect.contains(p))
    }

    /// Category of the first room containing `p`, else of the nearest room.
    pub fn category_at(&self, p: Vec2) -> u32 {
        if let Some(i) = self.room_index(p) {
            return self.rooms[i].category;
        }
        self.rooms
            .iter()
            .min_by(|a, b| a.rect.distance_to(p).total_cmp(&b.rect.distance_to(p)))
            .map(|r| r.category)
            .unwrap_or(0)
    }

    /// Two adjacent rooms of different categories joined by a straight
    /// walk, handy for desk-scale experiments.
    pub fn two_rooms(feature_dim: usize, sequences: usize, rng_seed: u64) -> Self {
        Self {
            feature_dim,
            label_names: vec!["corridor".into(), "office".into()],
            rooms: vec![
                Room {
                    rect: Rect::new(0.0, 0.0, 6.0, 3.0),
                    category: 0,
                    center: Vec::new(),
                    stddev: 0.1,
                },
                Room {
                    rect: Rect::new(6.0, 0.0, 12.0, 3.0),
                    category: 1,
                    center: Vec::new(),
                    stddev: 0.1,
                },
            ],
            waypoints: vec![
                Vec2::new(0.5, 1.5),
                Vec2::new(11.5, 1.5),
                Vec2::new(11.5, 2.5),
                Vec2::new(0.5, 2.5),
            ],
            step_length: 0.2,
            position_noise: 0.05,
            sequences,
            center_scale: 1.0,
            spatial_variation: 0.0,
            spatial_length_scale: 1.0,
            rng_seed,
        }
    }
}

struct SpatialField {
    freq: Vec<[f64; 2]>,
    phase: Vec<f64>,
}

impl SpatialField {
    fn value(&self, i: usize, p: Vec2) -> f64 {
        std::f64::consts::SQRT_2 * (self.freq[i][0] * p.x + self.freq[i][1] * p.y + self.phase[i]).cos()
    }
}

fn path_positions(waypoints: &[Vec2], step: f64) -> Vec<Vec2> {
    let mut out = vec![waypoints[0]];
    let mut carry = 0.0; // distance already walked past the last emitted point
    for w in waypoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b.x - a.x).hypot(b.y - a.y);
        let mut t = step - carry;
        while t <= len + 1e-12 {
            let f = t / len;
            out.push(Vec2::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)));
            t += step;
        }
        carry = len - (t - step);
    }
    out
}

fn sequence_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One stream per configured run. Frames are labeled with the category of
/// the room containing their noise-free position; positions are rounded to
/// 32-bit precision so the streams round-trip exactly.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<FeatureStream>> {
    config.validate()?;
    let m = config.feature_dim;
    let mut world = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let center_dist = Normal::new(0.0, config.center_scale).map_err(|e| Error::Config(e.to_string()))?;
    let centers: Vec<Vec<f64>> = config
        .rooms
        .iter()
        .map(|r| {
            if r.center.is_empty() {
                (0..m).map(|_| center_dist.sample(&mut world)).collect()
            } else {
                r.center.iter().map(|&c| f64::from(c)).collect()
            }
        })
        .collect();
    let freq_dist = Normal::new(0.0, 1.0 / config.spatial_length_scale).map_err(|e| Error::Config(e.to_string()))?;
    let field = SpatialField {
        freq: (0..m)
            .map(|_| [freq_dist.sample(&mut world), freq_dist.sample(&mut world)])
            .collect(),
        phase: (0..m)
            .map(|_| world.random_range(0.0..std::f64::consts::TAU))
            .collect(),
    };

    let path = path_positions(&config.waypoints, config.step_length);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Vec::with_capacity(config.sequences);
    for seq in 0..config.sequences {
        let mut rng = ChaCha8Rng::seed_from_u64(sequence_seed(config.rng_seed, seq));
        let mut stream = FeatureStream::new(format!("synth-{seq}"), m, config.label_names.clone());
        for (k, &truth) in path.iter().enumerate() {
            let room_idx = config.room_index(truth).unwrap_or_else(|| {
                // the path between two valid waypoints can leave every room
                config
                    .rooms
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.rect.distance_to(truth).total_cmp(&b.1.rect.distance_to(truth)))
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            });
            let room = &config.rooms[room_idx];
            let nx = config.position_noise * unit.sample(&mut rng);
            let ny = config.position_noise * unit.sample(&mut rng);
            let position = Vec2::new(
                f64::from((truth.x + nx) as f32),
                f64::from((truth.y + ny) as f32),
            );
            let features = (0..m)
                .map(|i| {
                    let spatial = config.spatial_variation * field.value(i, truth);
                    (centers[room_idx][i] + spatial + room.stddev * unit.sample(&mut rng)) as f32
                })
                .collect();
            stream.frames.push(Frame {
                frame_id: format!("{k:05}"),
                position,
                features,
                label: Some(room.category),
            });
        }
        out.push(stream);
    }
    Ok(out)
}
