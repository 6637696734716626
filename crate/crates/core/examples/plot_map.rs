//! Render a map as SVG with nodes colored by their predicted place class.
//!
//! cargo run --release --example plot_map -- [out.svg]

use topomap::classifiers::{mlp_predict, mlp_train, TrainConfig};
use topomap::dataset::{generate_synthetic, SynthConfig};
use topomap::map::build_from_streams;
use topomap::plot::{render_svg, PlotOptions};
use topomap::params::{Hyperparameters, Variant};

pub fn run(epochs: usize) -> topomap::Result<String> {
    let streams = generate_synthetic(&SynthConfig::two_rooms(32, 2, 4))?;
    let (train, walk) = (&streams[0], &streams[1]);
    let xs: Vec<&[f32]> = train.frames.iter().map(|f| f.features.as_slice()).collect();
    let ys: Vec<usize> = train.frames.iter().map(|f| f.label.unwrap_or(0) as usize).collect();
    let cfg = TrainConfig {
        epochs,
        ..Default::default()
    };
    let model = mlp_train(&xs, &ys, train.label_names.clone(), &cfg)?;

    let (map, _) = build_from_streams(&[walk], Hyperparameters::default(), Variant::Pm)?;
    let classes = map
        .nodes()
        .iter()
        .map(|n| mlp_predict(&model, &n.c).map(|p| p.class))
        .collect::<topomap::Result<Vec<_>>>()?;
    let inputs: Vec<_> = walk.frames.iter().map(|f| f.position).collect();
    Ok(render_svg(
        &map,
        &PlotOptions {
            node_labels: Some(&classes),
            label_names: model.class_names(),
            inputs: &inputs,
            width: 900.0,
        },
    ))
}

#[allow(dead_code)]
fn main() -> topomap::Result<()> {
    let svg = run(200)?;
    match std::env::args().nth(1) {
        Some(path) => std::fs::write(&path, svg).map_err(|e| topomap::Error::Usage(e.to_string())),
        None => {
            print!("{svg}");
            Ok(())
        }
    }
}
