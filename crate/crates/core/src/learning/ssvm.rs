use rayon::prelude::*;

use super::{loss_augmented_infer, TrainConfig};
use crate::error::{Error, Result};
use crate::inference::{infer, PreparedVideo};
use crate::model::StaogModel;
use crate::numerics::{Constraint, DualQp};
use crate::sparse::SparseVec;

#[derive(Debug, Clone, PartialEq)]
pub struct SsvmSolution {
    pub psi: Vec<f64>,
    /// `1/2 |ψ|² + C Σ_k [max_{y,L}(ψ·Φ + h) - ψ·Φ^d_k]` at the returned ψ.
    pub objective: f64,
    pub constraints: usize,
    pub rounds: usize,
}

/// Convex subproblem with fixed target features `Φ^d_k` (zero for
/// negatives), solved by n-slack cutting planes over the current graph.
pub fn solve_ssvm(
    model: &StaogModel,
    videos: &[PreparedVideo],
    positive: &[bool],
    targets: &[SparseVec],
    config: &TrainConfig,
) -> Result<SsvmSolution> {
    if videos.len() != positive.len() || videos.len() != targets.len() {
        return Err(Error::Internal("sample, label and target counts differ".into()));
    }
    let c = config.c;
    let mut qp = DualQp::new(model.dim(), c);
    let mut work = model.clone();
    work.set_psi(vec![0.0; model.dim()])?;
    let mut rounds = 0;
    loop {
        let psi = work.psi().to_vec();
        let aug: Vec<_> = videos
            .par_iter()
            .zip(positive.par_iter())
            .map(|(v, &y)| loss_augmented_infer(&work, v, y))
            .collect::<Result<_>>()?;
        let mut hinge_total = 0.0;
        let mut added = 0;
        if rounds < config.max_cutting_plane_rounds {
            for (k, a) in aug.iter().enumerate() {
                let target_score = targets[k].dot_dense(&psi);
                let violation = a.value - target_score - qp.hinge(k);
                if violation <= config.cutting_plane_tol {
                    continue;
                }
                let found = if a.positive {
                    work.labeled_joint_feature(videos[k].video(), true, &a.result.assignment)?
                } else {
                    SparseVec::new()
                };
                let coef = targets[k].sub(&found);
                if coef.is_zero() && a.loss == 0.0 {
                    continue;
                }
                qp.add(Constraint { coef, loss: a.loss, group: k });
                added += 1;
            }
        }
        if added == 0 {
            for (k, a) in aug.iter().enumerate() {
                hinge_total += a.value - targets[k].dot_dense(&psi);
            }
            let reg = 0.5 * psi.iter().map(|x| x * x).sum::<f64>();
            return Ok(SsvmSolution { psi, objective: reg + c * hinge_total, constraints: qp.len(), rounds });
        }
        rounds += 1;
        let sol = qp.solve(1e-6);
        work.set_psi(sol.psi)?;
    }
}

/// The CCCP energy of `model` on a binary training set, with fresh
/// inference for every sample.
pub fn energy(model: &StaogModel, videos: &[PreparedVideo], positive: &[bool], c: f64) -> Result<f64> {
    let scores: Vec<f64> = videos
        .par_iter()
        .map(|v| infer(model, v).map(|r| r.score))
        .collect::<Result<_>>()?;
    let reg = 0.5 * model.psi().iter().map(|x| x * x).sum::<f64>();
    let mut data = 0.0;
    for (&s, &y) in scores.iter().zip(positive) {
        let (_, aug) = super::loss_augmented_choice(y, s);
        data += aug - if y { s } else { 0.0 };
    }
    Ok(reg + c * data)
}
