//! Runs pruned inference on one video under a randomly weighted model,
//! then re-scores the returned configuration from scratch and through the
//! joint feature vector. On a reduced structure the result is compared
//! with exhaustive search.
//!
//! `cargo run --example infer_video`

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use staog::features::{build_codebook, synth_dataset, SynthSpec};
use staog::{infer, infer_bruteforce, IndexedVideo, LeafId, PreparedVideo, StaogModel, Structure};

fn random_model(structure: Structure, codebook: Arc<staog::Codebook>, rng: &mut ChaCha8Rng) -> staog::Result<StaogModel> {
    let mut model = StaogModel::new(structure, codebook)?;
    model.add_leaf(0, Some(LeafId(0)))?;
    let psi = (0..model.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    model.set_psi(psi)?;
    Ok(model)
}

fn main() -> staog::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let videos = synth_dataset(&SynthSpec::order_swap(2), 0)?;
    let descriptors: Vec<Vec<f64>> =
        videos.iter().flat_map(|v| v.points.iter().map(|p| p.descriptor.clone())).collect();
    let codebook = Arc::new(build_codebook(&descriptors, 8, 0)?);
    let video = IndexedVideo::new(&videos[0], &codebook)?;

    let model = random_model(Structure::default(), codebook.clone(), &mut rng)?;
    let pv = PreparedVideo::new(model.structure(), video.clone())?;
    let result = infer(&model, &pv)?;
    println!("score {:.6}", result.score);
    println!("anchor frames {:?}", result.assignment.anchor_frames(pv.base_anchors()));
    for (i, part) in result.assignment.parts.iter().enumerate() {
        println!("  or-node {i:>2}: {} at ({:>5.1}, {:>5.1})", part.leaf, part.x, part.y);
    }
    let direct = model.global_response(&video, &result.assignment)?;
    let dotted = model.joint_feature(&video, &result.assignment)?.dot_dense(model.psi());
    println!("re-scored {direct:.6}, via joint feature {dotted:.6}");

    let small = Structure {
        segments: 2,
        grid: [1, 2],
        steps: vec![-4, 4],
        max_hypotheses: usize::MAX,
        ..Structure::default()
    };
    let model = random_model(small, codebook, &mut rng)?;
    let fast = infer(&model, &PreparedVideo::new(model.structure(), video.clone())?)?;
    let exact = infer_bruteforce(&model, &video)?;
    println!(
        "reduced structure: dynamic programming {:.9}, exhaustive {:.9}, same configuration: {}",
        fast.score,
        exact.score,
        fast.assignment == exact.assignment
    );
    Ok(())
}
