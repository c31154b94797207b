//! Generates a planted-motif dataset and writes it as a features file.
//!
//! `cargo run --example synthetic_dataset [OUT]`

use std::path::PathBuf;

use staog::features::{read_feature_file, synth_dataset, write_feature_file, SynthSpec};

fn main() -> staog::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("staog_synthetic.jsonl"));
    let spec = SynthSpec::order_swap(20);
    let videos = synth_dataset(&spec, 1)?;
    write_feature_file(&out, &videos)?;

    let back = read_feature_file(&out)?;
    assert_eq!(back, videos);
    for v in videos.iter().step_by(10) {
        println!(
            "{:<8} label={:<2} {}x{} frames={} points={}",
            v.id,
            v.label.as_deref().unwrap_or("-"),
            v.width,
            v.height,
            v.num_frames,
            v.points.len()
        );
    }
    println!("{} videos written to {}", videos.len(), out.display());
    Ok(())
}
