//! Place accuracy of a growing map, checked after each new sequence.
//!
//! cargo run --release --example over_time

use topomap::classifiers::TrainConfig;
use topomap::dataset::{generate_synthetic, SynthConfig};
use topomap::evaluation::{eval_over_time, NodeTruth};
use topomap::params::{Hyperparameters, Variant};

pub fn run(repetitions: usize) -> topomap::Result<()> {
    let cfg = SynthConfig::two_rooms(64, 6, 21);
    let sequences = generate_synthetic(&cfg)?;
    let (train, map_sequences) = sequences.split_first().expect("six sequences");
    let params = Hyperparameters {
        tau: 1.0,
        ..Default::default()
    };
    let report = eval_over_time(
        train,
        map_sequences,
        &TrainConfig::default(),
        params,
        Variant::Pm,
        &NodeTruth::Regions(cfg),
        repetitions,
        21,
    )?;
    for (name, m) in &report.metrics {
        println!("{name}: {:.3} ({:.3})", m.mean, m.std);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> topomap::Result<()> {
    run(10)
}
