//! Weakly supervised training: latent structural SVM optimized by CCCP,
//! with energy-gated structure reconfiguration, and one-vs-rest multiclass.
//!
//! A binary problem has samples `(X_k, y_k)`. Positives carry a latent
//! configuration that is re-imputed every iteration; negatives have the
//! zero feature vector for `y = -1`. The energy
//!
//! ```text
//! E(ψ) = 1/2 |ψ|² + C Σ_k max_{y,L} (ψ·Φ(X_k, y, L) + h(y_k, y))
//!                 - C Σ_{k positive} max_L ψ·Φ(X_k, +1, L)
//! ```
//!
//! is evaluated with fresh inference after every step.

mod reconfigure;
mod ssvm;
mod train;

pub use reconfigure::{reconfigure, Reconfiguration, StructureEdit};
pub use ssvm::{energy, solve_ssvm, SsvmSolution};
pub use train::{predict, train, train_multiclass, ClassModel, IterationRecord, Prediction, TrainOutcome};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{infer, InferenceResult, PreparedVideo};
use crate::model::{BlockKey, LatentAssignment, StaogModel};
use crate::sparse::SparseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Hinge penalty C.
    pub c: f64,
    pub max_iters: usize,
    /// Stop when the relative energy change falls to this value.
    pub energy_tol: f64,
    /// Cutting planes stop when no sample violates by more than this.
    pub cutting_plane_tol: f64,
    pub max_cutting_plane_rounds: usize,
    /// Leaves that may be created per or-node per iteration.
    pub create_budget: usize,
    /// Leaves that may be removed per or-node per iteration.
    pub remove_budget: usize,
    /// Leaves with fewer positive samples than this are removed.
    pub min_cluster_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 0.003,
            max_iters: 30,
            energy_tol: 1e-4,
            cutting_plane_tol: 1e-3,
            max_cutting_plane_rounds: 1000,
            create_budget: 1,
            remove_budget: 1,
            min_cluster_size: 3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::argument(format!("C = {} must be positive", self.c)));
        }
        if !(self.energy_tol >= 0.0) || !(self.cutting_plane_tol > 0.0) {
            return Err(Error::argument("tolerances must be non-negative (cutting-plane tolerance positive)"));
        }
        if self.max_cutting_plane_rounds == 0 {
            return Err(Error::argument("max_cutting_plane_rounds must be >= 1"));
        }
        Ok(())
    }
}

/// A positive sample with its latent configuration fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputedSample {
    /// Index of the sample in the training set.
    pub index: usize,
    pub assignment: LatentAssignment,
    /// Φ(X_k, +1, L*_k).
    pub feature: SparseVec,
    pub score: f64,
}

impl ImputedSample {
    /// The appearance sub-block of the active leaf at `or_node` inside
    /// the joint feature.
    pub fn appearance(&self, model: &StaogModel, or_node: usize) -> Vec<f64> {
        let leaf = self.assignment.parts[or_node].leaf;
        let b = model.layout().get(&BlockKey::LeafAppearance { leaf }).expect("active leaf has a block");
        self.feature.slice_dense(b.offset, b.len)
    }
}

/// Best latent configuration of a positive sample under the current ψ.
pub fn latent_impute(model: &StaogModel, index: usize, video: &PreparedVideo) -> Result<ImputedSample> {
    let r = infer(model, video)?;
    let feature = model.joint_feature(video.video(), &r.assignment)?;
    Ok(ImputedSample { index, assignment: r.assignment, feature, score: r.score })
}

/// Imputes every positive, in sample order.
pub fn impute_positives(model: &StaogModel, videos: &[PreparedVideo], positive: &[bool]) -> Result<Vec<ImputedSample>> {
    (0..videos.len())
        .into_par_iter()
        .filter(|&k| positive[k])
        .map(|k| latent_impute(model, k, &videos[k]))
        .collect()
}

/// The CCCP linearization of the concave part, `-C Σ_k Φ(X_k, y_k, L*_k)`.
pub fn hyperplane(c: f64, imputed: &[ImputedSample], dim: usize) -> Vec<f64> {
    let mut q = vec![0.0; dim];
    for s in imputed {
        s.feature.axpy_into(-c, &mut q);
    }
    q
}

/// Winner of `max_{y, L} ψ·Φ(X, y, L) + h(y_true, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAugmented {
    /// Label of the winning branch.
    pub positive: bool,
    /// Inference result behind the `y = +1` branch.
    pub result: InferenceResult,
    pub value: f64,
    /// `h(y_true, y)` of the winning branch.
    pub loss: f64,
}

/// Two-branch comparison: `y = -1` is worth `h(y_true, -1)` (its feature
/// vector is zero), `y = +1` is worth `score + h(y_true, +1)`. The correct
/// label wins ties. Returns `(y, value)`.
pub fn loss_augmented_choice(truth: bool, score: f64) -> (bool, f64) {
    let h = |y: bool| if y == truth { 0.0 } else { 1.0 };
    let (pos, neg) = (score + h(true), h(false));
    let pick_pos = if truth { pos >= neg } else { pos > neg };
    if pick_pos {
        (true, pos)
    } else {
        (false, neg)
    }
}

pub fn loss_augmented_infer(model: &StaogModel, video: &PreparedVideo, truth: bool) -> Result<LossAugmented> {
    let result = infer(model, video)?;
    let (positive, value) = loss_augmented_choice(truth, result.score);
    let loss = if positive == truth { 0.0 } else { 1.0 };
    Ok(LossAugmented { positive, result, value, loss })
}
