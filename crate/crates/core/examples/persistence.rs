//! Save a map with its coverage log, reload it, and show that queries on
//! the reloaded map give the same answers.
//!
//! cargo run --example persistence -- [dir]

use std::path::Path;

use topomap::dataset::{generate_synthetic, load_stream, save_stream, SynthConfig};
use topomap::localization::localize;
use topomap::map::build_from_streams;
use topomap::map_store::{load_map, save_map};
use topomap::params::{Hyperparameters, Variant};

pub fn run(dir: &Path) -> topomap::Result<()> {
    let stream = generate_synthetic(&SynthConfig::two_rooms(16, 1, 9))?.remove(0);
    save_stream(&stream, dir.join("walk"))?;
    let stream = load_stream(dir.join("walk"))?;

    let (map, log) = build_from_streams(&[&stream], Hyperparameters::default(), Variant::Pm)?;
    save_map(&map, Some(&log), dir.join("map"))?;
    let (reloaded, reloaded_log) = load_map(dir.join("map"))?;
    assert_eq!(reloaded, map);
    assert_eq!(reloaded_log.as_ref(), Some(&log));

    let query = &stream.frames[stream.len() / 2].features;
    let a = localize(&map, query, 3)?;
    let b = localize(&reloaded, query, 3)?;
    assert_eq!(a, b);
    println!("map with {} nodes stored in {}", reloaded.len(), dir.join("map").display());
    for r in b {
        println!("rank {}: node {} activation {:.6}", r.rank, r.node_id, r.activation);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> topomap::Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => run(Path::new(&dir)),
        None => {
            let tmp = tempfile::tempdir().map_err(|e| topomap::Error::Usage(e.to_string()))?;
            run(tmp.path())
        }
    }
}
