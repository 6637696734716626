//! Build a topological map from synthetic walks through two rooms and
//! check how well the nodes cover the visited positions.
//!
//! cargo run --example build_map

use topomap::dataset::{generate_synthetic, SynthConfig};
use topomap::evaluation::eval_topology;
use topomap::map::build_from_streams;
use topomap::metrics::Vec2;
use topomap::params::{Hyperparameters, Variant};

pub fn run() -> topomap::Result<()> {
    let streams = generate_synthetic(&SynthConfig::two_rooms(64, 3, 7))?;
    let refs: Vec<_> = streams.iter().collect();
    let (map, log) = build_from_streams(&refs, Hyperparameters::default(), Variant::Pm)?;

    let positions: Vec<Vec2> = streams.iter().flat_map(|s| s.frames.iter().map(|f| f.position)).collect();
    let stats = eval_topology(&map, &positions)?;
    println!(
        "{} frames -> {} nodes, {} edges",
        positions.len(),
        map.len(),
        map.edges().len()
    );
    println!("distance to nearest node: mean {:.3} m, max {:.3} m", stats.mean_dist, stats.max_dist);

    let busiest = map.nodes().iter().max_by_key(|n| n.consolidation_count).expect("non-empty map");
    let covered = log.frames_per_node(map.len())[busiest.id].len();
    println!(
        "node {} at ({:.2}, {:.2}) consolidated {} vectors and covered {} frames",
        busiest.id, busiest.p.x, busiest.p.y, busiest.consolidation_count, covered
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> topomap::Result<()> {
    run()
}
