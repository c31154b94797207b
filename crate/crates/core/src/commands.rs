//! Implementations of the `staog` subcommands. Each returns the text to
//! print on standard output; files are written atomically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate, Scored};
use crate::features::{build_codebook, read_feature_file, synth_dataset, write_feature_file, Codebook, IndexedVideo, SynthSpec};
use crate::inference::PreparedVideo;
use crate::learning::{predict, train_multiclass};
use crate::model::{LatentAssignment, StaogModel};

/// Writes `bytes` to a temporary file beside `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn cmd_dict(features: &Path, k: usize, seed: u64, out: &Path) -> Result<String> {
    if k == 0 {
        return Err(Error::argument("--k must be >= 1"));
    }
    let videos = read_feature_file(features)?;
    let descriptors: Vec<Vec<f64>> = videos.iter().flat_map(|v| v.points.iter().map(|p| p.descriptor.clone())).collect();
    let codebook = build_codebook(&descriptors, k, seed).map_err(|e| match e {
        Error::Argument(msg) => Error::Argument(format!("--k: {msg}")),
        other => other,
    })?;
    codebook.save(out)?;
    Ok(format!("codebook: k={} dim={} -> {}\n", codebook.len(), codebook.dim(), out.display()))
}

pub fn cmd_synth(spec: &Path, seed: u64, out: &Path) -> Result<String> {
    let spec = SynthSpec::load(spec)?;
    let videos = synth_dataset(&spec, seed)?;
    write_feature_file(out, &videos)?;
    Ok(format!("synth: {} videos -> {}\n", videos.len(), out.display()))
}

/// Class to model file list written by `train` and read by `predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub codebook: String,
    pub classes: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub class: String,
    /// Model file, relative to the manifest's directory.
    pub model: String,
    /// SHA-256 of the model file bytes.
    pub sha256: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::format(format!("cannot read manifest {}: {e}", path.display())))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.version != 1 {
            return Err(Error::format(format!("unsupported manifest version {}", m.version)));
        }
        if m.classes.is_empty() {
            return Err(Error::format("manifest lists no classes"));
        }
        Ok(m)
    }

    /// Loads every model, checking file checksums.
    pub fn load_models(&self, manifest_path: &Path) -> Result<Vec<StaogModel>> {
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        self.classes
            .iter()
            .map(|entry| {
                let path = dir.join(&entry.model);
                let bytes = std::fs::read(&path)
                    .map_err(|e| Error::format(format!("cannot read model {}: {e}", path.display())))?;
                if sha256_hex(&bytes) != entry.sha256 {
                    return Err(Error::format(format!("checksum mismatch for {}", path.display())));
                }
                StaogModel::load(&path)
            })
            .collect()
    }
}

fn file_stem_for(class: &str) -> String {
    class.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn prepare_all(structure: &crate::model::Structure, codebook: &Codebook, videos: &[crate::features::FeatureVideo]) -> Result<Vec<PreparedVideo>> {
    videos
        .par_iter()
        .map(|v| PreparedVideo::new(structure, IndexedVideo::new(v, codebook)?))
        .collect()
}

/// Trains one model per label, writes them next to the manifest at `out`
/// (as `<manifest stem>.<class>.json`) and the per-iteration log to `log`.
pub fn cmd_train(features: &Path, codebook_path: &Path, config: Option<&Path>, out: &Path, log: Option<&Path>) -> Result<String> {
    let config = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let videos = read_feature_file(features)?;
    let labels: Vec<String> = videos
        .iter()
        .map(|v| v.label.clone().ok_or_else(|| Error::format(format!("video {} has no label", v.id))))
        .collect::<Result<_>>()?;
    let codebook = Arc::new(Codebook::load(codebook_path)?);
    let prepared = prepare_all(&config.structure, &codebook, &videos)?;
    let models = train_multiclass(&config.structure, codebook.clone(), &prepared, &labels, &config.train)?;

    let out_dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let codebook_ref = codebook_reference(codebook_path, &out_dir);
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("model").to_string();
    let mut entries = Vec::new();
    let mut log_text = String::new();
    let mut summary = String::new();
    for cm in &models {
        let mut model = cm.outcome.model.clone();
        model.set_codebook_path(codebook_ref.clone());
        let mut text = model.to_json();
        text.push('\n');
        let file = format!("{stem}.{}.json", file_stem_for(&cm.class));
        write_atomic(&out_dir.join(&file), text.as_bytes())?;
        entries.push(ManifestEntry { class: cm.class.clone(), model: file, sha256: sha256_hex(text.as_bytes()) });
        for rec in &cm.outcome.log {
            let mut v = serde_json::to_value(rec)?;
            v["class"] = serde_json::Value::String(cm.class.clone());
            writeln!(log_text, "{v}").unwrap();
        }
        writeln!(
            summary,
            "class {}: {} iterations, energy {:.6}, leaves {}",
            cm.class,
            cm.outcome.iterations(),
            cm.outcome.log.last().map_or(f64::NAN, |r| r.energy),
            model.num_leaves()
        )
        .unwrap();
    }
    let manifest = Manifest { version: 1, codebook: codebook_ref, classes: entries };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(out, text.as_bytes())?;
    if let Some(log) = log {
        write_atomic(log, log_text.as_bytes())?;
    }
    writeln!(summary, "manifest -> {}", out.display()).unwrap();
    Ok(summary)
}

/// The codebook path as stored in model files: a bare file name when it
/// sits in the output directory, otherwise an absolute path.
fn codebook_reference(codebook: &Path, out_dir: &Path) -> String {
    let same_dir = match (codebook.parent(), out_dir.canonicalize()) {
        (Some(parent), Ok(out)) => {
            let parent = if parent.as_os_str().is_empty() { Path::new(".") } else { parent };
            parent.canonicalize().is_ok_and(|p| p == out)
        }
        _ => false,
    };
    if same_dir {
        if let Some(name) = codebook.file_name() {
            return name.to_string_lossy().into_owned();
        }
    }
    codebook.canonicalize().unwrap_or_else(|_| codebook.to_path_buf()).to_string_lossy().into_owned()
}

/// One line of the score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRecord {
    pub id: String,
    pub scores: BTreeMap<String, f64>,
    pub predicted: String,
    /// Latent configuration chosen by the predicted class's model.
    pub assignment: LatentAssignment,
}

pub fn cmd_predict(manifest_path: &Path, features: &Path, out: &Path) -> Result<String> {
    let manifest = Manifest::load(manifest_path)?;
    let models = manifest.load_models(manifest_path)?;
    let codebook = models[0].codebook().clone();
    let videos = read_feature_file(features)?;
    let records: Vec<ScoreRecord> = videos
        .par_iter()
        .map(|v| {
            let indexed = IndexedVideo::new(v, &codebook)?;
            let p = predict(&models, &indexed)?;
            let scores = manifest.classes.iter().map(|e| e.class.clone()).zip(p.scores.iter().copied()).collect();
            Ok(ScoreRecord {
                id: v.id.clone(),
                scores,
                predicted: manifest.classes[p.best].class.clone(),
                assignment: p.results[p.best].assignment.clone(),
            })
        })
        .collect::<Result<_>>()?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    write_atomic(out, text.as_bytes())?;
    Ok(format!("predict: {} videos -> {}\n", records.len(), out.display()))
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::format(format!("cannot read scores {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::format(format!("scores line {}: {e}", n + 1))))
        .collect()
}

/// Metrics table. Accuracy is the fraction of a class's videos predicted
/// as that class; AP is the mean precision at the rank of each positive
/// when all videos are sorted by that class's score.
pub fn cmd_eval(scores: &Path, features: &Path) -> Result<String> {
    let records = read_scores(scores)?;
    let videos = read_feature_file(features)?;
    let truth: BTreeMap<&str, &str> = videos
        .iter()
        .map(|v| {
            v.label
                .as_deref()
                .map(|l| (v.id.as_str(), l))
                .ok_or_else(|| Error::format(format!("video {} has no label", v.id)))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Scored> = records
        .iter()
        .map(|r| {
            let t = truth.get(r.id.as_str()).ok_or_else(|| Error::format(format!("no video {} in features", r.id)))?;
            Ok(Scored { truth: t.to_string(), predicted: r.predicted.clone(), scores: r.scores.clone() })
        })
        .collect::<Result<_>>()?;
    let m = evaluate(&rows)?;
    let mut out = String::new();
    writeln!(out, "{:<16} {:>8} {:>10} {:>10}", "class", "videos", "accuracy", "AP").unwrap();
    for c in &m.classes {
        writeln!(out, "{:<16} {:>8} {:>10.4} {:>10.4}", c.class, c.support, c.accuracy, c.average_precision).unwrap();
    }
    writeln!(out, "{:<16} {:>8} {:>10.4} {:>10.4}", "mean", rows.len(), m.mean_accuracy, m.mean_average_precision).unwrap();
    Ok(out)
}
