//! Object labels for map nodes through a linear classification head.
//!
//! Real heads come from the feature extractor's export; here a random head
//! over the 13 default object classes stands in, which is enough to show
//! the node-versus-frames agreement measures.
//!
//! cargo run --example classify_objects

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topomap::classifiers::{head_logits, resolve_subset, topk_labels, LinearHead, DEFAULT_OBJECT_CLASSES};
use topomap::dataset::{generate_synthetic, SynthConfig};
use topomap::evaluation::object_protocol;
use topomap::params::{Hyperparameters, Variant};

pub fn run() -> topomap::Result<()> {
    let dim = 32;
    let names: Vec<String> = DEFAULT_OBJECT_CLASSES.iter().map(|s| s.to_string()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let head = LinearHead::new(
        dim,
        (0..names.len() * dim).map(|_| rng.random_range(-0.5..0.5)).collect(),
        vec![0.0; names.len()],
        names.clone(),
    )?;
    let subset = resolve_subset(&names, head.class_names())?;

    let streams = generate_synthetic(&SynthConfig::two_rooms(dim, 2, 11))?;
    let variants = [Variant::Pm, Variant::PmNoVh, Variant::PmNoVp];
    let report = object_protocol(&streams, &head, &subset, Hyperparameters::default(), &variants, 11)?;
    println!("variant    top5-acc  err_mean (std)");
    for v in variants {
        let top5 = report.metric(&format!("{}.top5_accuracy", v.as_str())).expect("reported");
        let err = report.metric(&format!("{}.err_mean", v.as_str())).expect("reported");
        println!("{:<10} {:.3}     {:.4} ({:.4})", v.as_str(), top5.mean, err.mean, err.std);
    }

    let first = &streams[0].frames[0];
    let top = topk_labels(&head_logits(&head, &first.features)?, 3);
    let labels: Vec<&str> = top.iter().map(|&i| head.class_names()[i].as_str()).collect();
    println!("frame {} top-3: {}", first.frame_id, labels.join(", "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> topomap::Result<()> {
    run()
}
