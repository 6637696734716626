//! Localization with image replication: how PM and PM without habituation
//! react when 10% of the build frames are repeated many times.
//!
//! cargo run --release --example localize_images -- [seeds] [copies]

use topomap::dataset::{generate_synthetic, SynthConfig};
use topomap::evaluation::{eval_localization, Replication};
use topomap::params::{Hyperparameters, Variant};

pub fn run(seeds: u64, copies: usize) -> topomap::Result<()> {
    let params = Hyperparameters {
        tau: 1.0,
        ..Default::default()
    };
    println!("seed  variant   top1@0  top1@{copies:<3} top5@0  top5@{copies}");
    for seed in 0..seeds {
        let mut cfg = SynthConfig::two_rooms(64, 3, seed);
        cfg.spatial_variation = 1.0;
        cfg.rooms.iter_mut().for_each(|r| r.stddev = 0.3);
        let streams = generate_synthetic(&cfg)?;
        let (query, build) = streams.split_last().expect("three streams");
        for variant in [Variant::Pm, Variant::PmNoVh] {
            let base = eval_localization(build, query, params, Replication::NONE, variant, seed)?;
            let rep = Replication { fraction: 0.1, copies };
            let dup = eval_localization(build, query, params, rep, variant, seed)?;
            println!(
                "{seed:<5} {:<9} {:.3}   {:.3}    {:.3}   {:.3}",
                variant.as_str(),
                base.top1,
                dup.top1,
                base.top5,
                dup.top5
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> topomap::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let copies = args.next().and_then(|a| a.parse().ok()).unwrap_or(40);
    run(seeds, copies)
}
