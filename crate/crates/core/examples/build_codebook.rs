//! Builds a small visual-word codebook and shows how interest points of one
//! video fall into words and into an anchor-frame volume.
//!
//! `cargo run --example build_codebook`

use staog::features::{build_codebook, synth_dataset, Rect, SynthSpec};
use staog::{IndexedVideo, Region3D};

fn main() -> staog::Result<()> {
    let videos = synth_dataset(&SynthSpec::order_swap(5), 3)?;
    let descriptors: Vec<Vec<f64>> =
        videos.iter().flat_map(|v| v.points.iter().map(|p| p.descriptor.clone())).collect();
    let codebook = build_codebook(&descriptors, 8, 0)?;
    println!("{} descriptors -> {} words of dimension {}", descriptors.len(), codebook.len(), codebook.dim());
    println!("checksum {}", codebook.checksum());

    let video = IndexedVideo::new(&videos[0], &codebook)?;
    let whole = video.video_histogram();
    println!("whole-video histogram of {}: {:?}", videos[0].id, dense(&whole, codebook.len()));

    // 15 frames around frame 10 in the top-left quadrant, where class A
    // plants `m1`
    let region = Region3D { center_frame: 10, span: 15, rect: Some(Rect::centered(40.0, 30.0, 60.0, 60.0)) };
    println!("top-left volume at frame 10:  {:?}", dense(&video.region_histogram(&region), codebook.len()));
    Ok(())
}

fn dense(h: &staog::sparse::SparseVec, len: usize) -> Vec<String> {
    (0..len).map(|n| format!("{:.2}", h.get(n))).collect()
}
