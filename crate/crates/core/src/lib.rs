//! Topological maps whose nodes consolidate deep visual features.
//!
//! A map grows from a stream of `(position, feature vector)` frames: nodes
//! are placed in space by a distance threshold, and each node keeps a moving
//! average of the features seen around it, gated by habituation so repeated
//! views do not drag it. The consolidated vectors feed object and place
//! classifiers and a relevance-weighted localization ranking.
//!
//! ```
//! use topomap::map::TopologicalMap;
//! use topomap::metrics::Vec2;
//! use topomap::params::Hyperparameters;
//!
//! let mut map = TopologicalMap::new(2, Hyperparameters::default()).unwrap();
//! map.process_observation(Vec2::new(0.0, 0.0), &[1.0, 0.0]).unwrap();
//! map.process_observation(Vec2::new(2.0, 0.0), &[0.0, 1.0]).unwrap();
//! assert_eq!(map.len(), 2);
//! assert!(map.has_edge(0, 1));
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod cli;
pub mod codec;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod localization;
pub mod map;
pub mod map_store;
pub mod metrics;
pub mod params;
pub mod plot;

pub use error::{Error, Result};
