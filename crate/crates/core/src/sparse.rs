//! Sorted sparse vectors.
//!
//! Joint feature vectors are long (one block per leaf, per edge leaf-pair)
//! but mostly zero, so they are stored as sorted `(index, value)` pairs.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from unordered entries; duplicate indices are summed
    /// and exact zeros dropped.
    pub fn from_entries(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let mut out = SparseVec { indices, values };
        out.prune();
        out
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        SparseVec { indices, values }
    }

    fn prune(&mut self) {
        let mut k = 0;
        for n in 0..self.indices.len() {
            if self.values[n] != 0.0 {
                self.indices[k] = self.indices[n];
                self.values[k] = self.values[n];
                k += 1;
            }
        }
        self.indices.truncate(k);
        self.values.truncate(k);
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(n) => self.values[n],
            Err(_) => 0.0,
        }
    }

    /// Dot product with a dense vector. Indices past its end contribute 0.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter()
            .map(|(i, v)| dense.get(i).map_or(0.0, |d| d * v))
            .sum()
    }

    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `self - other`.
    pub fn sub(&self, other: &SparseVec) -> SparseVec {
        let mut entries: Vec<(usize, f64)> = self.iter().collect();
        entries.extend(other.iter().map(|(i, v)| (i, -v)));
        SparseVec::from_entries(entries)
    }

    pub fn scale(&self, c: f64) -> SparseVec {
        let mut out = SparseVec {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        };
        out.prune();
        out
    }

    /// `dense += c * self`.
    pub fn axpy_into(&self, c: f64, dense: &mut [f64]) {
        for (i, v) in self.iter() {
            dense[i] += c * v;
        }
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        self.axpy_into(1.0, &mut out);
        out
    }

    /// Entries falling in `start..start + len`, re-based to 0.
    pub fn slice_dense(&self, start: usize, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, v) in self.iter() {
            if i >= start && i < start + len {
                out[i - start] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicates_and_drops_zeros() {
        let v = SparseVec::from_entries(vec![(3, 1.0), (1, 2.0), (3, -1.0), (5, 0.5)]);
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![(1, 2.0), (5, 0.5)]);
    }

    #[test]
    fn dots_agree_with_dense() {
        let a = SparseVec::from_dense(&[0.0, 1.0, 2.0, 0.0, -1.0]);
        let b = SparseVec::from_dense(&[3.0, 0.5, 0.0, 1.0, 2.0]);
        let bd = b.to_dense(5);
        assert_eq!(a.dot(&b), a.dot_dense(&bd));
        assert_eq!(a.dot(&b), 0.5 - 2.0);
        assert_eq!(a.sub(&a).nnz(), 0);
        assert_eq!(a.slice_dense(1, 2), vec![1.0, 2.0]);
    }
}
