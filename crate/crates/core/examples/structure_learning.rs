//! Structure reconfiguration on a class whose appearance in one cell comes
//! in two distinct modes: training splits that or-node into two leaves.
//!
//! `cargo run --release --example structure_learning`

use std::sync::Arc;

use staog::features::{build_codebook, synth_dataset, SynthSpec};
use staog::learning::{train, TrainConfig};
use staog::{IndexedVideo, PreparedVideo, Structure};

fn main() -> staog::Result<()> {
    let videos = synth_dataset(&SynthSpec::two_modes(20), 3)?;
    let descriptors: Vec<Vec<f64>> =
        videos.iter().flat_map(|v| v.points.iter().map(|p| p.descriptor.clone())).collect();
    let codebook = Arc::new(build_codebook(&descriptors, 8, 0)?);
    let structure = Structure::default();
    let prepared: Vec<PreparedVideo> = videos
        .iter()
        .map(|v| PreparedVideo::new(&structure, IndexedVideo::new(v, &codebook)?))
        .collect::<staog::Result<_>>()?;
    let positive: Vec<bool> = videos.iter().map(|v| v.label.as_deref() == Some("A")).collect();

    let outcome = train(&structure, codebook, &prepared, &positive, &TrainConfig::default())?;
    for r in &outcome.log {
        let status = if r.edits.is_empty() {
            "no edit proposed"
        } else if r.structure_accepted {
            "accepted"
        } else {
            "rejected"
        };
        println!("iter {:>2}  energy {:.9}  leaves {:?}  {status} {:?}", r.iter, r.energy, r.leaf_counts, r.edits);
    }
    let model = &outcome.model;
    let (t, cell) = (model.segment_of(4), model.cell_of(4));
    println!("or-node 4 (anchor {t}, cell {cell}) has leaves {:?}", model.children(4));
    Ok(())
}
