//! Place categorization with one fold per sequence: classifying map nodes
//! (PM) against classifying every raw frame (IMAGES), same folds and seeds.
//!
//! cargo run --release --example place_crossval

use topomap::classifiers::TrainConfig;
use topomap::dataset::{generate_synthetic, SynthConfig};
use topomap::evaluation::{crossval_place, NodeTruth};
use topomap::params::{Hyperparameters, Variant};

pub fn run(epochs: usize) -> topomap::Result<()> {
    let cfg = SynthConfig::two_rooms(64, 3, 5);
    let sequences = generate_synthetic(&cfg)?;
    let mlp = TrainConfig {
        epochs,
        ..Default::default()
    };
    let params = Hyperparameters {
        tau: 1.0,
        ..Default::default()
    };
    let report = crossval_place(&sequences, &mlp, params, Variant::Pm, &NodeTruth::Regions(cfg.clone()), 5)?;
    println!("{:<10} {:>15} {:>15}", "category", "PM", "IMAGES");
    let rows = cfg.label_names.iter().map(|n| format!("category.{n}")).chain(["overall".to_string()]);
    for row in rows {
        let cell = |prefix: &str| {
            report
                .metric(&format!("{prefix}.{row}"))
                .map_or("-".to_string(), |m| format!("{:.3} ({:.3})", m.mean, m.std))
        };
        println!("{:<10} {:>15} {:>15}", row.trim_start_matches("category."), cell("pm"), cell("images"));
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> topomap::Result<()> {
    run(200)
}
