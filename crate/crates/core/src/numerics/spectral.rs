use super::{kmeans, sq_dist, symmetric_eigen, ClusterResult};
use crate::error::Result;

/// Neighbor rank used for the affinity bandwidth.
const SCALE_NEIGHBOR: usize = 7;

/// Spectral clustering with an eigengap-selected cluster count.
///
/// Affinities are Gaussian, `exp(-d^2 / 2 sigma^2)` with self-loops, where
/// `sigma` is the median distance from each point to its 7th nearest
/// neighbor (or farthest, for fewer points); a zero median falls back to
/// `sigma = 1`. The cluster count is the position of the largest gap among
/// the smallest `max_clusters + 1` eigenvalues of the symmetric normalized
/// Laplacian. Rows of the leading eigenvectors are normalized and grouped
/// with k-means. Cluster ids are numbered by first appearance.
pub fn spectral_cluster(vectors: &[Vec<f64>], max_clusters: usize, seed: u64) -> Result<ClusterResult> {
    let n = vectors.len();
    if n < 2 || max_clusters <= 1 {
        return Ok(single_cluster(vectors));
    }
    let d2: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| sq_dist(&vectors[i], &vectors[j])).collect())
        .collect();
    let sigma = bandwidth(&d2);
    let affinity: Vec<Vec<f64>> = d2
        .iter()
        .map(|row| row.iter().map(|d| (-d / (2.0 * sigma * sigma)).exp()).collect())
        .collect();
    let inv_sqrt_deg: Vec<f64> = affinity.iter().map(|row| 1.0 / row.iter().sum::<f64>().sqrt()).collect();
    let laplacian: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let norm = affinity[i][j] * inv_sqrt_deg[i] * inv_sqrt_deg[j];
                    if i == j { 1.0 - norm } else { -norm }
                })
                .collect()
        })
        .collect();
    let (values, vectors_e) = symmetric_eigen(&laplacian);

    let k_cap = max_clusters.min(n - 1);
    let mut k = 1;
    let mut best_gap = f64::NEG_INFINITY;
    for c in 1..=k_cap {
        let gap = values[c] - values[c - 1];
        if gap > best_gap + 1e-12 {
            best_gap = gap;
            k = c;
        }
    }
    if k == 1 {
        return Ok(single_cluster(vectors));
    }

    let embedding: Vec<Vec<f64>> = vectors_e
        .iter()
        .map(|row| {
            let r: Vec<f64> = row[..k].to_vec();
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 { r.iter().map(|x| x / norm).collect() } else { r }
        })
        .collect();
    let raw = kmeans(&embedding, k, seed, 100)?;

    // renumber by first appearance; drop clusters nobody landed in
    let mut relabel = vec![usize::MAX; k];
    let mut next = 0;
    let assignment: Vec<usize> = raw
        .assignment
        .iter()
        .map(|&c| {
            if relabel[c] == usize::MAX {
                relabel[c] = next;
                next += 1;
            }
            relabel[c]
        })
        .collect();
    Ok(with_means(vectors, assignment, next))
}

fn bandwidth(d2: &[Vec<f64>]) -> f64 {
    let n = d2.len();
    let rank = SCALE_NEIGHBOR.min(n - 1);
    let mut kth: Vec<f64> = d2
        .iter()
        .map(|row| {
            let mut r: Vec<f64> = row.clone();
            r.sort_by(f64::total_cmp);
            // r[0] is the point itself
            r[rank].sqrt()
        })
        .collect();
    kth.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 { kth[n / 2] } else { 0.5 * (kth[n / 2 - 1] + kth[n / 2]) };
    if median > 0.0 { median } else { 1.0 }
}

fn single_cluster(vectors: &[Vec<f64>]) -> ClusterResult {
    with_means(vectors, vec![0; vectors.len()], 1)
}

fn with_means(vectors: &[Vec<f64>], assignment: Vec<usize>, k: usize) -> ClusterResult {
    let dim = vectors.first().map_or(0, Vec::len);
    let mut centroids = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (v, &c) in vectors.iter().zip(&assignment) {
        counts[c] += 1;
        centroids[c].iter_mut().zip(v).for_each(|(s, x)| *s += x);
    }
    for (c, n) in centroids.iter_mut().zip(&counts) {
        if *n > 0 {
            c.iter_mut().for_each(|x| *x /= *n as f64);
        }
    }
    let inertia = vectors.iter().zip(&assignment).map(|(v, &c)| sq_dist(v, &centroids[c])).sum();
    ClusterResult { assignment, centroids, inertia }
}
