use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{energy, impute_positives, reconfigure, solve_ssvm, ImputedSample, StructureEdit, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{Codebook, IndexedVideo};
use crate::inference::{infer, InferenceResult, PreparedVideo};
use crate::model::{StaogModel, Structure};
use crate::sparse::SparseVec;

/// One line of the training log. Iteration 0 is the initial solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub structure_accepted: bool,
    /// Edits proposed by reconfiguration; applied only when
    /// `structure_accepted` is set.
    pub edits: Vec<StructureEdit>,
    pub leaf_counts: Vec<usize>,
    pub constraint_count: usize,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: StaogModel,
    pub log: Vec<IterationRecord>,
    /// Whether the relative energy change fell below the tolerance before
    /// the iteration cap.
    pub converged: bool,
}

impl TrainOutcome {
    /// Energies of the accepted iterations, initial solve first.
    pub fn energies(&self) -> Vec<f64> {
        self.log.iter().map(|r| r.energy).collect()
    }

    /// CCCP iterations run after the initial solve.
    pub fn iterations(&self) -> usize {
        self.log.len().saturating_sub(1)
    }
}

fn targets(n: usize, imputed: &[ImputedSample]) -> Vec<SparseVec> {
    let mut t = vec![SparseVec::new(); n];
    for s in imputed {
        t[s.index] = s.feature.clone();
    }
    t
}

/// Trains a binary model by CCCP. `positive[k]` is the label of
/// `videos[k]`; all videos must be prepared for `structure`.
pub fn train(
    structure: &Structure,
    codebook: Arc<Codebook>,
    videos: &[PreparedVideo],
    positive: &[bool],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if videos.len() != positive.len() {
        return Err(Error::argument("one label per video is required"));
    }
    if !positive.iter().any(|&p| p) || positive.iter().all(|&p| p) {
        return Err(Error::argument("training needs at least one positive and one negative sample"));
    }
    let start = Instant::now();
    let n = videos.len();
    let mut model = StaogModel::new(structure.clone(), codebook)?;

    // canonical latents: the zero model picks displacement 0, the sole
    // leaf and the rest positions wherever those are feasible
    let imputed = impute_positives(&model, videos, positive)?;
    let sol = solve_ssvm(&model, videos, positive, &targets(n, &imputed), config)?;
    model.set_psi(sol.psi)?;
    let mut current = energy(&model, videos, positive, config.c)?;
    let mut log = vec![IterationRecord {
        iter: 0,
        energy: current,
        structure_accepted: false,
        edits: Vec::new(),
        leaf_counts: model.leaf_counts(),
        constraint_count: sol.constraints,
        wall_time: start.elapsed().as_secs_f64(),
    }];

    let mut converged = false;
    for iter in 1..=config.max_iters {
        let imputed = impute_positives(&model, videos, positive)?;
        let seed = config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(iter as u64);
        let proposal = reconfigure(&model, videos, &imputed, config, seed)?;

        let edits = proposal.edits.clone();
        let mut next: Option<(StaogModel, f64, usize)> = None;
        if proposal.changed() {
            let mut cand = proposal.model;
            let sol = solve_ssvm(&cand, videos, positive, &targets(n, &proposal.imputed), config)?;
            cand.set_psi(sol.psi)?;
            let e = energy(&cand, videos, positive, config.c)?;
            if e < current {
                next = Some((cand, e, sol.constraints));
            }
        }
        let accepted = next.is_some();
        let (new_model, e, constraints) = match next {
            Some(x) => x,
            None => {
                let sol = solve_ssvm(&model, videos, positive, &targets(n, &imputed), config)?;
                let mut m = model.clone();
                m.set_psi(sol.psi)?;
                let e = energy(&m, videos, positive, config.c)?;
                (m, e, sol.constraints)
            }
        };
        if e > current {
            // the step made things worse (inference is pruned, so the
            // convex bound is not exact); keep the previous model
            converged = true;
            break;
        }
        let change = (current - e).abs() / current.abs().max(f64::MIN_POSITIVE);
        model = new_model;
        current = e;
        log.push(IterationRecord {
            iter,
            energy: e,
            structure_accepted: accepted,
            edits,
            leaf_counts: model.leaf_counts(),
            constraint_count: constraints,
            wall_time: start.elapsed().as_secs_f64(),
        });
        if change <= config.energy_tol {
            converged = true;
            break;
        }
    }
    Ok(TrainOutcome { model, log, converged })
}

/// A trained one-vs-rest member.
#[derive(Debug, Clone)]
pub struct ClassModel {
    pub class: String,
    pub outcome: TrainOutcome,
}

/// Trains one binary model per class (sorted by name), using every other
/// class's videos as negatives.
pub fn train_multiclass(
    structure: &Structure,
    codebook: Arc<Codebook>,
    videos: &[PreparedVideo],
    labels: &[String],
    config: &TrainConfig,
) -> Result<Vec<ClassModel>> {
    if labels.len() != videos.len() {
        return Err(Error::argument("one label per video is required"));
    }
    let classes: std::collections::BTreeSet<&String> = labels.iter().collect();
    if classes.len() < 2 {
        return Err(Error::argument(format!("one-vs-rest needs at least two classes, found {}", classes.len())));
    }
    classes
        .into_iter()
        .map(|class| {
            let positive: Vec<bool> = labels.iter().map(|l| l == class).collect();
            let mut outcome = train(structure, codebook.clone(), videos, &positive, config)?;
            outcome.model.set_label(Some(class.clone()));
            Ok(ClassModel { class: class.clone(), outcome })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Index into the model list of the highest score; the first model
    /// wins exact ties.
    pub best: usize,
    pub scores: Vec<f64>,
    pub results: Vec<InferenceResult>,
}

/// Scores a video under every model and picks the argmax.
pub fn predict(models: &[StaogModel], video: &IndexedVideo) -> Result<Prediction> {
    if models.is_empty() {
        return Err(Error::argument("no models to predict with"));
    }
    let mut prepared: Option<PreparedVideo> = None;
    let mut results = Vec::with_capacity(models.len());
    for m in models {
        let reuse = prepared.as_ref().is_some_and(|p| p.structure() == m.structure());
        if !reuse {
            prepared = Some(PreparedVideo::new(m.structure(), video.clone())?);
        }
        results.push(infer(m, prepared.as_ref().unwrap())?);
    }
    let scores: Vec<f64> = results.iter().map(|r| r.score).collect();
    let mut best = 0;
    for (n, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = n;
        }
    }
    Ok(Prediction { best, scores, results })
}
