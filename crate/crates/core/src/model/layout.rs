//! Canonical ordering of the parameter vector ψ (and of every joint
//! feature vector Φ, bin for bin).
//!
//! Blocks appear in this order:
//!
//! | block                      | length | count                          |
//! |----------------------------|--------|--------------------------------|
//! | `root`                     | k      | 1                              |
//! | `and_appearance(t)`        | k      | per anchor frame, t ascending  |
//! | `and_displacement(t)`      | 1      | per anchor frame, t ascending  |
//! | `leaf_appearance(j)`       | k      | per leaf, id ascending         |
//! | `leaf_deformation(j)`      | 2      | per leaf, id ascending         |
//! | `spatial(j, j')`           | 8      | per spatial edge, per leaf pair|
//! | `temporal(j, j')`          | 4      | per temporal edge, per leaf pair|
//! | `bias`                     | 1      | 1                              |
//!
//! Edges are ordered by their (lower, higher) or-node pair; leaf pairs
//! within an edge by (leaf of lower or-node, leaf of higher or-node).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LeafId;

pub const SPATIAL_BINS: usize = 8;
pub const TEMPORAL_BINS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "block", rename_all = "snake_case")]
pub enum BlockKey {
    Root,
    AndAppearance { t: usize },
    AndDisplacement { t: usize },
    LeafAppearance { leaf: LeafId },
    LeafDeformation { leaf: LeafId },
    Spatial { leaf_a: LeafId, leaf_b: LeafId },
    Temporal { leaf_a: LeafId, leaf_b: LeafId },
    Bias,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    #[serde(flatten)]
    pub key: BlockKey,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinLayout {
    blocks: Vec<Block>,
    index: BTreeMap<BlockKey, usize>,
    total: usize,
}

impl BinLayout {
    pub(crate) fn from_keys(keys: impl IntoIterator<Item = (BlockKey, usize)>) -> Self {
        let mut blocks = Vec::new();
        let mut index = BTreeMap::new();
        let mut offset = 0;
        for (key, len) in keys {
            index.insert(key, blocks.len());
            blocks.push(Block { key, offset, len });
            offset += len;
        }
        BinLayout { blocks, index, total: offset }
    }

    /// Total number of bins.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn get(&self, key: &BlockKey) -> Option<&Block> {
        self.index.get(key).map(|&n| &self.blocks[n])
    }

    pub fn range(&self, key: &BlockKey) -> Option<std::ops::Range<usize>> {
        self.get(key).map(|b| b.offset..b.offset + b.len)
    }

    /// Copies every block present in both layouts from `values` (laid out
    /// by `self`) into a new vector laid out by `target`; other bins are 0.
    pub fn remap(&self, values: &[f64], target: &BinLayout) -> Vec<f64> {
        let mut out = vec![0.0; target.len()];
        for b in target.blocks() {
            if let Some(src) = self.range(&b.key) {
                out[b.offset..b.offset + b.len].copy_from_slice(&values[src]);
            }
        }
        out
    }
}
