use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sq_dist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Cluster id per input vector, in `[0, centroids.len())`.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
}

impl ClusterResult {
    pub fn n_clusters(&self) -> usize {
        self.centroids.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        self.assignment.iter().for_each(|&c| sizes[c] += 1);
        sizes
    }
}

/// Lloyd's k-means with k-means++ seeding.
///
/// Stops at an assignment fixpoint or after `max_iters` iterations. A
/// cluster left empty by an update is re-seeded at the point farthest from
/// its centroid. Deterministic for a given `seed`.
pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<ClusterResult> {
    kmeans_traced(vectors, k, seed, max_iters).map(|(r, _)| r)
}

/// As [`kmeans`], also returning the inertia after every assignment step.
pub(crate) fn kmeans_traced(
    vectors: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<(ClusterResult, Vec<f64>)> {
    let dim = vectors.first().map(Vec::len).ok_or_else(|| Error::argument("kmeans: no vectors"))?;
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::argument("kmeans: inconsistent dimensions"));
    }
    if k == 0 || k > vectors.len() {
        return Err(Error::argument(format!("kmeans: k = {k} not in [1, {}]", vectors.len())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus(vectors, k, &mut rng);
    let mut trace = Vec::new();
    let mut previous: Option<Vec<usize>> = None;
    for _ in 0..max_iters.max(1) {
        let (assignment, dists) = assign(vectors, &centroids);
        trace.push(dists.iter().sum());
        if previous.as_ref() == Some(&assignment) {
            break;
        }
        centroids = update(vectors, &assignment, &dists, centroids);
        previous = Some(assignment);
    }
    let (assignment, dists) = assign(vectors, &centroids);
    let inertia = dists.iter().sum();
    if trace.last() != Some(&inertia) {
        trace.push(inertia);
    }
    Ok((ClusterResult { assignment, centroids, inertia }, trace))
}

fn plus_plus(vectors: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut centroids = vec![vectors[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = vectors.iter().map(|v| sq_dist(v, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            // rounding at the tail: fall back to the last positive weight
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = vectors[pick].clone();
        for (i, v) in vectors.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(v, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(vectors: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let nearest = |v: &Vec<f64>| {
        let mut best = (0, f64::INFINITY);
        for (c, centroid) in centroids.iter().enumerate() {
            let d = sq_dist(v, centroid);
            if d < best.1 {
                best = (c, d);
            }
        }
        best
    };
    let pairs: Vec<(usize, f64)> = if vectors.len() * centroids.len() > 50_000 {
        vectors.par_iter().map(nearest).collect()
    } else {
        vectors.iter().map(nearest).collect()
    };
    pairs.into_iter().unzip()
}

fn update(
    vectors: &[Vec<f64>],
    assignment: &[usize],
    dists: &[f64],
    old: Vec<Vec<f64>>,
) -> Vec<Vec<f64>> {
    let k = old.len();
    let dim = old[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (v, &c) in vectors.iter().zip(assignment) {
        counts[c] += 1;
        sums[c].iter_mut().zip(v).for_each(|(s, x)| *s += x);
    }
    let mut centroids: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .zip(old)
        .map(|((s, &n), old)| if n > 0 { s.into_iter().map(|x| x / n as f64).collect() } else { old })
        .collect();
    let mut taken = vec![false; vectors.len()];
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let far = (0..vectors.len())
            .filter(|&i| !taken[i])
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            });
        if let Some(i) = far {
            taken[i] = true;
            centroids[c] = vectors[i].clone();
        }
    }
    centroids
}
