#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use staog::model::PartChoice;
use staog::{Codebook, FeatureVideo, IndexedVideo, InterestPoint, LatentAssignment, LeafId, StaogModel, Structure};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn line_codebook(words: usize) -> Arc<Codebook> {
    Arc::new(Codebook::new((0..words).map(|i| vec![i as f64, 0.0]).collect()).unwrap())
}

/// Uniformly scattered points whose descriptors snap to random words.
pub fn random_video(rng: &mut ChaCha8Rng, codebook: &Codebook, width: u32, height: u32, frames: u32, points: usize) -> IndexedVideo {
    let words = codebook.len();
    let points = (0..points)
        .map(|_| InterestPoint {
            frame: rng.random_range(0..frames),
            x: rng.random_range(0.0..width as f64),
            y: rng.random_range(0.0..height as f64),
            descriptor: vec![rng.random_range(0..words) as f64, 0.0],
        })
        .collect();
    let v = FeatureVideo { id: "rand".into(), label: None, width, height, num_frames: frames, descriptor_dim: 2, points };
    IndexedVideo::new(&v, codebook).unwrap()
}

/// A small structure: up to two anchors and two cells, at most three
/// displacement choices, no hypothesis cap.
pub fn small_structure(rng: &mut ChaCha8Rng) -> Structure {
    let segments = rng.random_range(1..=2);
    let grid = if rng.random_bool(0.5) { [1, 2] } else { [1, 1] };
    let step = rng.random_range(1..=4);
    let steps = match rng.random_range(0..3) {
        0 => vec![],
        1 => vec![step],
        _ => vec![-step, step],
    };
    Structure {
        segments,
        grid,
        m: 4,
        rho: [3, 5, 7][rng.random_range(0..3)],
        part_w: rng.random_range(10..=40),
        part_h: rng.random_range(10..=40),
        steps,
        max_hypotheses: usize::MAX,
        near_radius: rng.random_range(10.0..60.0),
        search_radius: rng.random_range(0..=15),
        search_stride: rng.random_range(4..=8),
    }
}

/// A model with up to `max_leaves` leaves per or-node and weights drawn
/// from `[-1, 1]`.
pub fn random_model(rng: &mut ChaCha8Rng, structure: Structure, codebook: Arc<Codebook>, max_leaves: usize) -> StaogModel {
    let mut model = StaogModel::new(structure, codebook).unwrap();
    for i in 0..model.num_or_nodes() {
        let extra = rng.random_range(0..max_leaves);
        for _ in 0..extra {
            let donor = model.children(i)[0];
            model.add_leaf(i, Some(donor)).unwrap();
        }
    }
    let psi = (0..model.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    model.set_psi(psi).unwrap();
    model
}

/// A valid assignment with random displacements, leaves and positions
/// anywhere in the frame.
pub fn random_assignment(rng: &mut ChaCha8Rng, model: &StaogModel, video: &IndexedVideo) -> LatentAssignment {
    let s = model.structure();
    let base = staog::features::initial_anchors(video.num_frames, s.segments).unwrap();
    let choices = s.displacements();
    loop {
        let displacements: Vec<i32> = (0..s.segments).map(|_| choices[rng.random_range(0..choices.len())]).collect();
        let parts = (0..model.num_or_nodes())
            .map(|i| {
                let kids = model.children(i);
                PartChoice {
                    leaf: kids[rng.random_range(0..kids.len())],
                    x: rng.random_range(0.0..video.width as f64),
                    y: rng.random_range(0.0..video.height as f64),
                }
            })
            .collect();
        let a = LatentAssignment { displacements, parts };
        if model.check_assignment(&a, video.width, video.height, &base, video.num_frames).is_ok() {
            return a;
        }
    }
}

pub fn leaf(n: u32) -> LeafId {
    LeafId(n)
}
