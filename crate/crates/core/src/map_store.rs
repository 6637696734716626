//! Persistence of finished maps and their build coverage log.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{Bundle, BundleWriter};
use crate::error::{Error, Result};
use crate::map::{CoverageLog, Edge, MapNode, TopologicalMap};
use crate::metrics::Vec2;
use crate::params::{Hyperparameters, Variant};

const KIND: &str = "map";

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    id: usize,
    p: [f64; 2],
    consolidation_count: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MapManifest {
    feature_dim: usize,
    hyperparameters: Hyperparameters,
    variant: Variant,
    nodes: Vec<NodeRow>,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coverage: Option<CoverageLog>,
}

/// Write `map` (stored finalized) and an optional coverage log to the
/// bundle directory `dir`.
pub fn save_map(map: &TopologicalMap, coverage: Option<&CoverageLog>, dir: impl AsRef<Path>) -> Result<()> {
    let m = map.feature_dim();
    let n = map.len();
    let mut w = BundleWriter::new(dir, KIND);
    w.add_f32("c", n, m, map.nodes().iter().flat_map(|x| x.c.iter().copied()));
    w.add_f32("delta", n, m, map.nodes().iter().flat_map(|x| x.delta.iter().copied()));
    w.add_f32("u", n, m, map.nodes().iter().flat_map(|x| x.u.iter().copied()));
    w.finish(MapManifest {
        feature_dim: m,
        hyperparameters: *map.params(),
        variant: map.variant(),
        nodes: map
            .nodes()
            .iter()
            .map(|x| NodeRow {
                id: x.id,
                p: [x.p.x, x.p.y],
                consolidation_count: x.consolidation_count,
            })
            .collect(),
        edges: map.edges().map(|e| [e.0, e.1]).collect(),
        coverage: coverage.cloned(),
    })
}

/// Load a map bundle. The returned map has no last winner.
pub fn load_map(dir: impl AsRef<Path>) -> Result<(TopologicalMap, Option<CoverageLog>)> {
    let bundle: Bundle<MapManifest> = Bundle::open(dir.as_ref(), KIND)?;
    let body = &bundle.body;
    let (n, m) = (body.nodes.len(), body.feature_dim);
    let c = bundle.read_f32("c", n, m)?;
    let delta = bundle.read_f32("delta", n, m)?;
    let u = bundle.read_f32("u", n, m)?;
    if m == 0 {
        return Err(Error::format(bundle.dir(), "feature_dim is zero"));
    }
    let nodes = body
        .nodes
        .iter()
        .enumerate()
        .map(|(i, row)| MapNode {
            id: row.id,
            p: Vec2::from(row.p),
            c: c[i * m..(i + 1) * m].to_vec(),
            delta: delta[i * m..(i + 1) * m].to_vec(),
            u: u[i * m..(i + 1) * m].to_vec(),
            consolidation_count: row.consolidation_count,
        })
        .collect();
    let map = TopologicalMap::from_parts(
        m,
        body.hyperparameters,
        body.variant,
        nodes,
        body.edges.iter().map(|e| Edge::new(e[0], e[1])),
    )
    .map_err(|e| Error::format(bundle.dir(), e.to_string()))?;
    Ok((map, bundle.body.coverage))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::snapshot;
    use rand::{Rng, SeedableRng};

    fn built_map() -> (TopologicalMap, CoverageLog) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let p = Hyperparameters {
            tau: 0.5,
            ..Default::default()
        };
        let mut map = TopologicalMap::new(6, p).unwrap();
        let mut log = CoverageLog::default();
        for k in 0..400 {
            let s = Vec2::new(rng.random_range(0.0..12.0), rng.random_range(0.0..8.0));
            let v: Vec<f32> = (0..6).map(|_| rng.random_range(0.0..3.0)).collect();
            let out = map.process_observation(s, &v).unwrap();
            log.record("seq", &k.to_string(), &out);
        }
        (map, log)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let (mut map, log) = built_map();
        assert!(map.len() >= 50, "{} nodes", map.len());
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        save_map(&map, Some(&log), &a).unwrap();
        let (loaded, loaded_log) = load_map(&a).unwrap();
        assert_eq!(loaded.last_winner(), None);
        map.finalize();
        assert_eq!(loaded, map);
        assert_eq!(loaded_log.as_ref(), Some(&log));
        for (x, y) in loaded.nodes().iter().zip(map.nodes()) {
            let bits = |v: &[f32]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&x.c), bits(&y.c));
            assert_eq!(bits(&x.delta), bits(&y.delta));
            assert_eq!(bits(&x.u), bits(&y.u));
        }
        save_map(&loaded, loaded_log.as_ref(), &b).unwrap();
        assert_eq!(snapshot(&a).unwrap(), snapshot(&b).unwrap());
    }

    #[test]
    fn tampered_blob_rejected() {
        let (map, _) = built_map();
        let dir = tempfile::tempdir().unwrap();
        save_map(&map, None, dir.path()).unwrap();
        let path = dir.path().join("delta.f32");
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[10] ^= 0x40;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_map(dir.path()), Err(Error::Checksum { .. })));
    }

    #[test]
    fn wrong_magic_rejected() {
        let (map, _) = built_map();
        let dir = tempfile::tempdir().unwrap();
        save_map(&map, None, dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("topomap-bundle", "other-thing")).unwrap();
        assert!(matches!(load_map(dir.path()), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn empty_map_round_trips() {
        let map = TopologicalMap::new(4, Hyperparameters::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_map(&map, None, dir.path()).unwrap();
        let (loaded, log) = load_map(dir.path()).unwrap();
        assert_eq!(loaded, map);
        assert!(log.is_none());
    }
}
