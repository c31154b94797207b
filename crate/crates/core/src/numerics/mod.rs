//! Numerical kernels: k-means, spectral clustering, symmetric
//! eigendecomposition and the restricted SSVM dual QP.

mod eigen;
mod kmeans;
mod qp;
mod spectral;

pub use eigen::symmetric_eigen;
pub use kmeans::{kmeans, ClusterResult};
pub use qp::{qp_solve, Constraint, DualQp, QpSolution};
pub use spectral::spectral_cluster;

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
