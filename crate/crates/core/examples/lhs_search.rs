//! Latin hypercube search over the hyperparameters, scoring each sample by
//! localization TOP-1 on a held-out synthetic walk.
//!
//! cargo run --release --example lhs_search -- [samples]

use topomap::dataset::{generate_synthetic, SynthConfig};
use topomap::evaluation::{eval_localization, lhs_sample, LhsRanges, Replication};
use topomap::params::{Hyperparameters, Variant};

pub fn run(samples: usize) -> topomap::Result<()> {
    let mut cfg = SynthConfig::two_rooms(32, 3, 2);
    cfg.spatial_variation = 1.0;
    cfg.rooms.iter_mut().for_each(|r| r.stddev = 0.3);
    let streams = generate_synthetic(&cfg)?;
    let (query, build) = streams.split_last().expect("three streams");

    let candidates = lhs_sample(&LhsRanges::default(), samples, 2, &Hyperparameters::default())?;
    let mut best: Option<(f64, Hyperparameters)> = None;
    for p in candidates {
        let score = eval_localization(build, query, p, Replication::NONE, Variant::Pm, 2)?;
        println!(
            "alpha {:.4} tau {:6.2} gamma {:.3} beta {:.3} s {:.4} -> top1 {:.3} top5 {:.3}",
            p.alpha, p.tau, p.gamma, p.beta, p.s_slope, score.top1, score.top5
        );
        if best.is_none_or(|(b, _)| score.top1 > b) {
            best = Some((score.top1, p));
        }
    }
    if let Some((top1, p)) = best {
        println!("best top1 {top1:.3}: {p:?}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> topomap::Result<()> {
    let samples = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    run(samples)
}
