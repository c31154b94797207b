//! Dual of the restricted margin-rescaling SSVM problem:
//!
//! ```text
//! max_a  sum_r a_r loss_r - 1/2 || sum_r a_r coef_r ||^2
//! s.t.   a_r >= 0,   sum_{r in group k} a_r <= C   for every sample k
//! ```
//!
//! with primal `psi = sum_r a_r coef_r`. Each group carries an implicit
//! slack coordinate `C - sum a_r` (coefficient 0, loss 0), which turns the
//! per-group constraint into a simplex; pairwise steps move mass between two
//! coordinates of one group.

use std::collections::BTreeMap;

use crate::sparse::SparseVec;

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coef: SparseVec,
    pub loss: f64,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub psi: Vec<f64>,
    pub alphas: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub steps: usize,
}

/// Incremental dual solver. Constraints can be appended between solves
/// and the previous multipliers are kept as a warm start.
#[derive(Debug, Clone)]
pub struct DualQp {
    c: f64,
    dim: usize,
    constraints: Vec<Constraint>,
    gram: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    // (G a)_r = coef_r . psi
    margins: Vec<f64>,
    groups: BTreeMap<usize, Vec<usize>>,
}

const MAX_STEPS: usize = 5_000_000;

#[derive(Clone, Copy, PartialEq)]
enum Coord {
    Slack,
    Row(usize),
}

impl DualQp {
    pub fn new(dim: usize, c: f64) -> Self {
        assert!(c > 0.0, "C must be positive");
        DualQp {
            c,
            dim,
            constraints: Vec::new(),
            gram: Vec::new(),
            alphas: Vec::new(),
            margins: Vec::new(),
            groups: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn add(&mut self, constraint: Constraint) -> usize {
        let r = self.constraints.len();
        let row: Vec<f64> = self
            .constraints
            .iter()
            .map(|other| other.coef.dot(&constraint.coef))
            .chain(std::iter::once(constraint.coef.norm_sq()))
            .collect();
        for (g, v) in self.gram.iter_mut().zip(&row) {
            g.push(*v);
        }
        let margin = self.alphas.iter().zip(&row).map(|(a, g)| a * g).sum();
        self.gram.push(row);
        self.margins.push(margin);
        self.alphas.push(0.0);
        self.groups.entry(constraint.group).or_default().push(r);
        self.constraints.push(constraint);
        r
    }

    fn gradient(&self, r: usize) -> f64 {
        self.constraints[r].loss - self.margins[r]
    }

    pub fn dual_objective(&self) -> f64 {
        self.alphas
            .iter()
            .enumerate()
            .map(|(r, a)| a * (self.constraints[r].loss - 0.5 * self.margins[r]))
            .sum()
    }

    /// Primal minus dual objective on the restricted problem.
    pub fn gap(&self) -> f64 {
        self.groups
            .values()
            .map(|rows| {
                let xi = rows.iter().map(|&r| self.gradient(r)).fold(0.0, f64::max);
                self.c * xi - rows.iter().map(|&r| self.alphas[r] * self.gradient(r)).sum::<f64>()
            })
            .sum()
    }

    /// Current hinge of a sample: `max(0, max_r (loss_r - coef_r . psi))`
    /// over its constraints, 0 for an unknown group.
    pub fn hinge(&self, group: usize) -> f64 {
        self.groups
            .get(&group)
            .map_or(0.0, |rows| rows.iter().map(|&r| self.gradient(r)).fold(0.0, f64::max))
    }

    fn slack(&self, group: usize) -> f64 {
        self.c - self.groups[&group].iter().map(|&r| self.alphas[r]).sum::<f64>()
    }

    /// One pairwise ascent step on the most KKT-violating group.
    /// Returns `false` when no group violates by more than `tol`.
    pub(crate) fn step(&mut self, tol: f64) -> bool {
        let mut best: Option<(f64, usize, Coord, Coord)> = None;
        for (&group, rows) in &self.groups {
            let slack = self.slack(group);
            // the slack coordinate has gradient 0
            let (mut up, mut g_up) = (Coord::Slack, 0.0);
            let (mut down, mut g_down) =
                if slack > 0.0 { (Coord::Slack, 0.0) } else { (Coord::Slack, f64::INFINITY) };
            for &r in rows {
                let g = self.gradient(r);
                if g > g_up {
                    up = Coord::Row(r);
                    g_up = g;
                }
                if self.alphas[r] > 0.0 && g < g_down {
                    down = Coord::Row(r);
                    g_down = g;
                }
            }
            let violation = g_up - g_down;
            if up != down && violation > tol && best.as_ref().is_none_or(|b| violation > b.0) {
                best = Some((violation, group, up, down));
            }
        }
        let Some((_, group, up, down)) = best else {
            return false;
        };
        let grad = |c: Coord| match c {
            Coord::Slack => 0.0,
            Coord::Row(r) => self.gradient(r),
        };
        let gram = |a: Coord, b: Coord| match (a, b) {
            (Coord::Row(i), Coord::Row(j)) => self.gram[i][j],
            _ => 0.0,
        };
        let limit = match down {
            Coord::Slack => self.slack(group),
            Coord::Row(d) => self.alphas[d],
        };
        let curvature = gram(up, up) + gram(down, down) - 2.0 * gram(up, down);
        let gain = grad(up) - grad(down);
        let delta = if curvature > 1e-15 { (gain / curvature).min(limit) } else { limit };
        if !(delta > 0.0) {
            return false;
        }
        if let Coord::Row(u) = up {
            self.alphas[u] += delta;
            for (m, g) in self.margins.iter_mut().zip(&self.gram[u]) {
                *m += delta * g;
            }
        }
        if let Coord::Row(d) = down {
            self.alphas[d] = if delta >= limit { 0.0 } else { (self.alphas[d] - delta).max(0.0) };
            for (m, g) in self.margins.iter_mut().zip(&self.gram[d]) {
                *m -= delta * g;
            }
        }
        true
    }

    fn refresh_margins(&mut self) {
        for r in 0..self.margins.len() {
            self.margins[r] = self.alphas.iter().zip(&self.gram[r]).map(|(a, g)| a * g).sum();
        }
    }

    /// Ascends until the duality gap is at most `tol`.
    pub fn solve(&mut self, tol: f64) -> QpSolution {
        let mut steps = 0;
        while steps < MAX_STEPS {
            if steps % 256 == 0 {
                self.refresh_margins();
                if self.gap() <= tol {
                    break;
                }
            }
            if !self.step(tol * 1e-3) {
                self.refresh_margins();
                break;
            }
            steps += 1;
        }
        self.refresh_margins();
        let mut psi = vec![0.0; self.dim];
        for (con, a) in self.constraints.iter().zip(&self.alphas) {
            if *a != 0.0 {
                con.coef.axpy_into(*a, &mut psi);
            }
        }
        let primal = self.primal_objective(&psi);
        let dual = self.dual_objective();
        QpSolution {
            psi,
            alphas: self.alphas.clone(),
            primal_objective: primal,
            dual_objective: dual,
            gap: self.gap(),
            steps,
        }
    }

    /// `1/2 ||psi||^2 + C sum_k max(0, max_r in k (loss_r - coef_r . psi))`.
    pub fn primal_objective(&self, psi: &[f64]) -> f64 {
        let reg = 0.5 * psi.iter().map(|x| x * x).sum::<f64>();
        let hinge: f64 = self
            .groups
            .values()
            .map(|rows| {
                rows.iter()
                    .map(|&r| self.constraints[r].loss - self.constraints[r].coef.dot_dense(psi))
                    .fold(0.0, f64::max)
            })
            .sum();
        reg + self.c * hinge
    }
}

/// Solves the restricted dual from scratch to duality gap `<= 1e-13`.
/// Since `|psi - psi*|^2 <= 2 gap`, psi is then within 5e-7 of the optimum.
pub fn qp_solve(constraints: Vec<Constraint>, c: f64, dim: usize) -> QpSolution {
    let mut qp = DualQp::new(dim, c);
    for con in constraints {
        qp.add(con);
    }
    qp.solve(1e-13)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn con(dense: &[f64], loss: f64, group: usize) -> Constraint {
        Constraint { coef: SparseVec::from_dense(dense), loss, group }
    }

    #[test]
    fn empty_problem_is_zero() {
        let s = qp_solve(vec![], 1.0, 3);
        assert_eq!(s.psi, vec![0.0; 3]);
        assert_eq!(s.primal_objective, 0.0);
    }

    #[test]
    fn single_constraint_closed_form() {
        // alpha = min(C, loss / ||coef||^2)
        let s = qp_solve(vec![con(&[1.0, 0.0], 1.0, 0)], 10.0, 2);
        assert!((s.psi[0] - 1.0).abs() < 1e-9 && s.psi[1] == 0.0);
        let s = qp_solve(vec![con(&[2.0, 0.0], 1.0, 0)], 0.1, 2);
        assert!((s.alphas[0] - 0.1).abs() < 1e-12);
        assert!((s.psi[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn dual_ascent_monotone_and_box_feasible() {
        let mut qp = DualQp::new(3, 0.7);
        qp.add(con(&[1.0, 2.0, 0.0], 1.0, 0));
        qp.add(con(&[0.5, -1.0, 1.0], 1.0, 0));
        qp.add(con(&[-1.0, 0.0, 2.0], 0.5, 1));
        qp.add(con(&[0.0, 1.0, 1.0], 1.0, 1));
        qp.add(con(&[0.0, 0.0, 0.0], 1.0, 2));
        let mut last = qp.dual_objective();
        while qp.step(1e-12) {
            let d = qp.dual_objective();
            assert!(d >= last - 1e-12, "{d} < {last}");
            last = d;
            for rows in qp.groups.values() {
                let s: f64 = rows.iter().map(|&r| qp.alphas[r]).sum();
                assert!(s <= 0.7 + 1e-9);
                assert!(rows.iter().all(|&r| qp.alphas[r] >= 0.0));
            }
        }
        let sol = qp.solve(1e-9);
        assert!(sol.gap <= 1e-9);
        assert!((sol.primal_objective - sol.dual_objective).abs() <= 1e-8);
    }
}
