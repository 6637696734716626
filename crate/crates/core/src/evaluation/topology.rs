use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::TopologicalMap;
use crate::metrics::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyStats {
    pub mean_dist: f64,
    pub max_dist: f64,
}

/// Mean and maximum distance from each presented position to its nearest node.
pub fn eval_topology(map: &TopologicalMap, positions: &[Vec2]) -> Result<TopologyStats> {
    if map.is_empty() {
        return Err(Error::EmptyMap);
    }
    if positions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for &p in positions {
        let (_, d) = map.find_winner(p).expect("map is nonempty");
        sum += d;
        max = max.max(d);
    }
    Ok(TopologyStats {
        mean_dist: sum / positions.len() as f64,
        max_dist: max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SynthConfig};
    use crate::map::build_from_streams;
    use crate::metrics::euclidean_distance;
    use crate::params::{Hyperparameters, Variant};

    #[test]
    fn node_at_every_position_gives_zero() {
        let mut map = TopologicalMap::new(1, Hyperparameters::default()).unwrap();
        let pos: Vec<Vec2> = (0..5).map(|i| Vec2::new(i as f64 * 3.0, 0.0)).collect();
        for &p in &pos {
            map.insert_node(p, &[0.0]).unwrap();
        }
        let t = eval_topology(&map, &pos).unwrap();
        assert_eq!((t.mean_dist, t.max_dist), (0.0, 0.0));
    }

    #[test]
    fn corridor_matches_brute_force() {
        let streams = generate_synthetic(&SynthConfig::two_rooms(4, 2, 5)).unwrap();
        let refs: Vec<_> = streams.iter().collect();
        let (map, _) = build_from_streams(&refs, Hyperparameters::default(), Variant::Pm).unwrap();
        let pos: Vec<Vec2> = streams.iter().flat_map(|s| s.frames.iter().map(|f| f.position)).collect();
        let t = eval_topology(&map, &pos).unwrap();
        // brute force: every (position, node) pair
        let dists: Vec<f64> = pos
            .iter()
            .map(|&p| {
                map.nodes()
                    .iter()
                    .map(|n| euclidean_distance(p, n.p))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mean = dists.iter().sum::<f64>() / dists.len() as f64;
        let max = dists.iter().cloned().fold(0.0, f64::max);
        assert!((t.mean_dist - mean).abs() < 1e-12);
        assert_eq!(t.max_dist, max);
        assert!(t.mean_dist > 0.0 && t.mean_dist < 0.9);
        assert!(t.max_dist <= 0.9);
    }

    #[test]
    fn empty_map_is_error() {
        let map = TopologicalMap::new(1, Hyperparameters::default()).unwrap();
        assert!(matches!(eval_topology(&map, &[Vec2::new(0.0, 0.0)]), Err(Error::EmptyMap)));
    }
}
