//! Trains a single class-vs-rest model by alternating latent imputation
//! and structural SVM solves, printing the energy of every iteration.
//!
//! `cargo run --release --example train_binary`

use std::sync::Arc;

use staog::features::{build_codebook, synth_dataset, SynthSpec};
use staog::learning::{train, TrainConfig};
use staog::{infer, IndexedVideo, PreparedVideo, Structure};

fn main() -> staog::Result<()> {
    let train_videos = synth_dataset(&SynthSpec::order_swap(20), 1)?;
    let test_videos = synth_dataset(&SynthSpec::order_swap(10), 2)?;
    let descriptors: Vec<Vec<f64>> =
        train_videos.iter().flat_map(|v| v.points.iter().map(|p| p.descriptor.clone())).collect();
    let codebook = Arc::new(build_codebook(&descriptors, 8, 0)?);
    let structure = Structure::default();
    let prepare = |videos: &[staog::FeatureVideo]| -> staog::Result<Vec<PreparedVideo>> {
        videos.iter().map(|v| PreparedVideo::new(&structure, IndexedVideo::new(v, &codebook)?)).collect()
    };
    let prepared = prepare(&train_videos)?;
    let positive: Vec<bool> = train_videos.iter().map(|v| v.label.as_deref() == Some("A")).collect();

    let outcome = train(&structure, codebook.clone(), &prepared, &positive, &TrainConfig::default())?;
    for r in &outcome.log {
        println!("iter {:>2}  energy {:.9}  constraints {:>4}  {:.2}s", r.iter, r.energy, r.constraint_count, r.wall_time);
    }
    println!("converged: {}", outcome.converged);

    let mut correct = 0;
    for (v, pv) in test_videos.iter().zip(prepare(&test_videos)?) {
        let score = infer(&outcome.model, &pv)?.score;
        let said_a = score > 0.0;
        correct += usize::from(said_a == (v.label.as_deref() == Some("A")));
    }
    println!("held-out sign accuracy {correct}/{}", test_videos.len());
    Ok(())
}
