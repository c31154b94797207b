use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::kmeans;

/// Visual-word vocabulary: `k` centroids of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    centroids: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CodebookFile {
    version: u32,
    dim: usize,
    centroids: Vec<Vec<f64>>,
}

impl Codebook {
    pub fn new(centroids: Vec<Vec<f64>>) -> Result<Self> {
        let dim = centroids
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::format("codebook needs at least one centroid"))?;
        if dim == 0 {
            return Err(Error::format("codebook dimension must be >= 1"));
        }
        if let Some(n) = centroids.iter().position(|c| c.len() != dim) {
            return Err(Error::format(format!("centroid {n} has length != {dim}")));
        }
        let mut sorted: Vec<&Vec<f64>> = centroids.iter().collect();
        sorted.sort_by(|a, b| cmp_bits(a, b));
        if sorted.windows(2).any(|w| cmp_bits(w[0], w[1]).is_eq()) {
            return Err(Error::format("codebook contains bit-identical centroids"));
        }
        Ok(Codebook { dim, centroids })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of visual words.
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    /// Index of the nearest centroid (squared Euclidean), lowest index on ties.
    pub fn nearest(&self, descriptor: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (n, c) in self.centroids.iter().enumerate() {
            let d: f64 = c.iter().zip(descriptor).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best = n;
            }
        }
        best
    }

    pub fn to_json(&self) -> String {
        let file = CodebookFile { version: 1, dim: self.dim, centroids: self.centroids.clone() };
        serde_json::to_string(&file).expect("codebook serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CodebookFile = serde_json::from_str(text)?;
        if file.version != 1 {
            return Err(Error::format(format!("unsupported codebook version {}", file.version)));
        }
        let cb = Codebook::new(file.centroids)?;
        if cb.dim != file.dim {
            return Err(Error::format(format!(
                "codebook declares dim {} but centroids have {}",
                file.dim, cb.dim
            )));
        }
        Ok(cb)
    }

    /// Hex SHA-256 of the serialized document; model files pin this.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::format(format!("cannot read codebook {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        crate::commands::write_atomic(path, text.as_bytes())
    }
}

fn cmp_bits(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().map(|v| v.to_bits()).cmp(b.iter().map(|v| v.to_bits()))
}

/// Clusters descriptors into a `k`-word codebook with seeded k-means++.
pub fn build_codebook(descriptors: &[Vec<f64>], k: usize, seed: u64) -> Result<Codebook> {
    let dim = descriptors
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::format("no descriptors to cluster"))?;
    if descriptors.iter().any(|d| d.len() != dim) {
        return Err(Error::format("descriptors have inconsistent dimensions"));
    }
    if k == 0 || k > descriptors.len() {
        return Err(Error::argument(format!(
            "k = {k} must be in [1, {}]",
            descriptors.len()
        )));
    }
    let result = kmeans(descriptors, k, seed, 100)?;
    Codebook::new(result.centroids).map_err(|_| {
        Error::argument(format!("k = {k} exceeds the number of distinct descriptors"))
    })
}
