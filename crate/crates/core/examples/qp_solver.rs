//! The dual QP behind each cutting-plane round, on a problem small enough
//! to check by hand.
//!
//! `cargo run --example qp_solver`

use staog::numerics::{qp_solve, Constraint};
use staog::sparse::SparseVec;

fn main() {
    // one constraint psi . (2, 0) >= 1 - xi with C = 10: the minimum-norm
    // solution is psi = (0.5, 0) with xi = 0
    let one = vec![Constraint { coef: SparseVec::from_dense(&[2.0, 0.0]), loss: 1.0, group: 0 }];
    let s = qp_solve(one, 10.0, 2);
    println!("single: psi = {:?}, primal {:.6}, gap {:.2e}", s.psi, s.primal_objective, s.gap);

    // the same constraint with C = 0.1 is capped: alpha = C and psi = 2C
    let capped = vec![Constraint { coef: SparseVec::from_dense(&[2.0, 0.0]), loss: 1.0, group: 0 }];
    let s = qp_solve(capped, 0.1, 2);
    println!("capped: psi = {:?}, alphas {:?}", s.psi, s.alphas);

    // two samples along orthogonal axes
    let two = vec![
        Constraint { coef: SparseVec::from_dense(&[1.0, 0.0]), loss: 1.0, group: 0 },
        Constraint { coef: SparseVec::from_dense(&[0.0, 1.0]), loss: 2.0, group: 1 },
    ];
    let s = qp_solve(two, 5.0, 2);
    println!("two:    psi = {:?}, dual {:.6}", s.psi, s.dual_objective);
}
