//! Three-class one-vs-rest training, model files on disk, prediction and
//! per-class accuracy and average precision on held-out videos.
//!
//! `cargo run --release --example one_vs_rest`

use std::collections::BTreeMap;
use std::sync::Arc;

use staog::eval::{evaluate, Scored};
use staog::features::{build_codebook, synth_dataset, Motif, SynthClass, SynthSpec};
use staog::learning::{predict, train_multiclass, TrainConfig};
use staog::{IndexedVideo, PreparedVideo, StaogModel, Structure};

fn three_classes(per_class: usize) -> SynthSpec {
    let mut spec = SynthSpec::order_swap(per_class);
    spec.classes.push(SynthClass {
        name: "C".into(),
        count: per_class,
        jitter: 3,
        motifs: vec![
            Motif { slot: 0, cell: [0, 1], modes: vec!["m4".into()], noise: 0.08 },
            Motif { slot: 1, cell: [1, 1], modes: vec!["m3".into()], noise: 0.08 },
            Motif { slot: 2, cell: [0, 1], modes: vec!["m1".into()], noise: 0.08 },
        ],
    });
    spec
}

fn main() -> staog::Result<()> {
    let train_videos = synth_dataset(&three_classes(12), 1)?;
    let test_videos = synth_dataset(&three_classes(6), 2)?;
    let descriptors: Vec<Vec<f64>> =
        train_videos.iter().flat_map(|v| v.points.iter().map(|p| p.descriptor.clone())).collect();
    let codebook = Arc::new(build_codebook(&descriptors, 8, 0)?);
    let dir = tempfile::tempdir()?;
    let codebook_path = dir.path().join("codebook.json");
    codebook.save(&codebook_path)?;

    let structure = Structure::default();
    let prepared: Vec<PreparedVideo> = train_videos
        .iter()
        .map(|v| PreparedVideo::new(&structure, IndexedVideo::new(v, &codebook)?))
        .collect::<staog::Result<_>>()?;
    let labels: Vec<String> = train_videos.iter().map(|v| v.label.clone().unwrap_or_default()).collect();
    let trained = train_multiclass(&structure, codebook.clone(), &prepared, &labels, &TrainConfig::default())?;

    let mut models = Vec::new();
    for cm in &trained {
        let path = dir.path().join(format!("{}.json", cm.class));
        cm.outcome.model.save(&path)?;
        models.push(StaogModel::load(&path)?);
        println!("class {}: {} iterations, {} leaves", cm.class, cm.outcome.iterations(), cm.outcome.model.num_leaves());
    }

    let mut rows = Vec::new();
    for v in &test_videos {
        let p = predict(&models, &IndexedVideo::new(v, &codebook)?)?;
        let scores: BTreeMap<String, f64> = trained.iter().map(|c| c.class.clone()).zip(p.scores).collect();
        rows.push(Scored { truth: v.label.clone().unwrap_or_default(), predicted: trained[p.best].class.clone(), scores });
    }
    let metrics = evaluate(&rows)?;
    for c in &metrics.classes {
        println!("{}: accuracy {:.3}  AP {:.3}", c.class, c.accuracy, c.average_precision);
    }
    println!("mean accuracy {:.3}, mAP {:.3}", metrics.mean_accuracy, metrics.mean_average_precision);
    Ok(())
}
