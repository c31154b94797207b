//! The and-or graph: structure hyperparameters, the node/edge graph, the
//! parameter vector ψ and the latent assignment it is scored under.

mod io;
mod joint;
mod layout;
pub mod relations;
mod response;

pub use layout::{BinLayout, Block, BlockKey, SPATIAL_BINS, TEMPORAL_BINS};
pub use response::{leaf_score, temporal_penalty_score};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Codebook, Rect, Region3D};

/// Stable leaf identifier. Ids are never reused within one model's life.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LeafId(pub u32);

impl fmt::Display for LeafId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

/// Structural hyperparameters of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Structure {
    /// Number of anchor frames (and-nodes).
    #[serde(rename = "T")]
    pub segments: usize,
    /// Spatial grid as `[rows, cols]`; one or-node per cell and anchor frame.
    pub grid: [usize; 2],
    /// Maximum number of leaves per or-node.
    pub m: usize,
    /// Temporal span of every part and frame volume, in frames.
    pub rho: u32,
    pub part_w: u32,
    pub part_h: u32,
    /// Nonzero anchor displacements; 0 is always allowed in addition.
    #[serde(rename = "sigma")]
    pub steps: Vec<i32>,
    /// Hypotheses kept per (anchor frame, displacement).
    #[serde(rename = "H")]
    pub max_hypotheses: usize,
    /// Distance threshold of the near/far relation, in pixels.
    pub near_radius: f64,
    /// Part search window half-size around the cell center, in pixels.
    pub search_radius: u32,
    pub search_stride: u32,
}

impl Default for Structure {
    fn default() -> Self {
        Structure {
            segments: 3,
            grid: [2, 2],
            m: 4,
            rho: 15,
            part_w: 60,
            part_h: 60,
            steps: vec![-2, 2, -4, 4, -6, 6, -8, 8, -10, 10],
            max_hypotheses: 5,
            near_radius: 90.0,
            search_radius: 30,
            search_stride: 10,
        }
    }
}

impl Structure {
    /// Or-nodes per and-node.
    pub fn cells(&self) -> usize {
        self.grid[0] * self.grid[1]
    }

    pub fn num_or_nodes(&self) -> usize {
        self.segments * self.cells()
    }

    /// Candidate displacements in tie-break order: 0, then the steps.
    pub fn displacements(&self) -> Vec<i32> {
        std::iter::once(0).chain(self.steps.iter().copied()).collect()
    }

    /// Half-open range of admissible anchor frames for a video.
    pub fn anchor_range(&self, num_frames: u32) -> (i64, i64) {
        let half = (self.rho / 2) as i64;
        (half, num_frames as i64 - half)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::argument(msg));
        if self.segments == 0 {
            return fail("T must be >= 1".into());
        }
        if self.grid[0] == 0 || self.grid[1] == 0 {
            return fail(format!("grid {:?} has an empty dimension", self.grid));
        }
        if self.m == 0 {
            return fail("m must be >= 1".into());
        }
        if self.rho == 0 {
            return fail("rho must be >= 1".into());
        }
        if self.part_w == 0 || self.part_h == 0 {
            return fail("part size must be positive".into());
        }
        if self.max_hypotheses == 0 {
            return fail("H must be >= 1".into());
        }
        if self.search_stride == 0 {
            return fail("search_stride must be >= 1".into());
        }
        if !(self.near_radius.is_finite() && self.near_radius >= 0.0) {
            return fail(format!("near_radius {} must be finite and >= 0", self.near_radius));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &s in &self.steps {
            if s == 0 || !seen.insert(s) {
                return fail(format!("displacement steps must be distinct and nonzero, got {:?}", self.steps));
            }
        }
        Ok(())
    }

    /// Rest position of grid cell `cell` in a `width x height` frame.
    pub fn cell_center(&self, cell: usize, width: u32, height: u32) -> (f64, f64) {
        let (rows, cols) = (self.grid[0], self.grid[1]);
        let (r, c) = (cell / cols, cell % cols);
        (
            (c as f64 + 0.5) * width as f64 / cols as f64,
            (r as f64 + 0.5) * height as f64 / rows as f64,
        )
    }

    /// The part volume of a leaf detected at `p` around anchor `frame`.
    pub fn part_region(&self, frame: i64, p: (f64, f64)) -> Region3D {
        Region3D {
            center_frame: frame,
            span: self.rho,
            rect: Some(Rect::centered(p.0, p.1, self.part_w as f64, self.part_h as f64)),
        }
    }

    /// Spatial edges as `(or_a, or_b)`, `or_a < or_b`: right and lower
    /// 4-neighbors inside one anchor frame, ordered by `or_a` then `or_b`.
    pub fn spatial_edges(&self) -> Vec<(usize, usize)> {
        let (rows, cols) = (self.grid[0], self.grid[1]);
        let k = self.cells();
        let mut edges = Vec::new();
        for t in 0..self.segments {
            for cell in 0..k {
                let (r, c) = (cell / cols, cell % cols);
                let i = t * k + cell;
                if c + 1 < cols {
                    edges.push((i, i + 1));
                }
                if r + 1 < rows {
                    edges.push((i, i + cols));
                }
            }
        }
        edges
    }

    /// Temporal edges: the same cell in consecutive anchor frames.
    pub fn temporal_edges(&self) -> Vec<(usize, usize)> {
        let k = self.cells();
        (0..self.segments.saturating_sub(1))
            .flat_map(|t| (0..k).map(move |cell| (t * k + cell, (t + 1) * k + cell)))
            .collect()
    }
}

/// The leaf chosen at one or-node and where it was detected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartChoice {
    pub leaf: LeafId,
    pub x: f64,
    pub y: f64,
}

impl PartChoice {
    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Hidden variables of one video: an anchor displacement per and-node and
/// an active leaf with its position per or-node (or-node order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentAssignment {
    pub displacements: Vec<i32>,
    pub parts: Vec<PartChoice>,
}

impl LatentAssignment {
    /// Displaced anchor frames `tau_t + delta_t`.
    pub fn anchor_frames(&self, base: &[i64]) -> Vec<i64> {
        base.iter().zip(&self.displacements).map(|(b, d)| b + *d as i64).collect()
    }
}

/// A full model: structure, graph, codebook reference and ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct StaogModel {
    structure: Structure,
    codebook: Arc<Codebook>,
    codebook_path: String,
    label: Option<String>,
    or_children: Vec<Vec<LeafId>>,
    leaf_parent: BTreeMap<LeafId, usize>,
    next_leaf: u32,
    layout: BinLayout,
    psi: Vec<f64>,
}

impl StaogModel {
    /// A model with one leaf per or-node and ψ = 0.
    pub fn new(structure: Structure, codebook: Arc<Codebook>) -> Result<Self> {
        structure.validate()?;
        let or_children: Vec<Vec<LeafId>> = (0..structure.num_or_nodes()).map(|i| vec![LeafId(i as u32)]).collect();
        Self::from_graph(structure, codebook, or_children, None)
    }

    /// Builds a model over an explicit leaf graph with ψ = 0.
    pub fn with_leaves(structure: Structure, codebook: Arc<Codebook>, or_children: Vec<Vec<LeafId>>) -> Result<Self> {
        structure.validate()?;
        Self::from_graph(structure, codebook, or_children, None)
    }

    fn from_graph(
        structure: Structure,
        codebook: Arc<Codebook>,
        mut or_children: Vec<Vec<LeafId>>,
        next_leaf: Option<u32>,
    ) -> Result<Self> {
        if or_children.len() != structure.num_or_nodes() {
            return Err(Error::Invariant(format!(
                "{} or-nodes given, structure needs {}",
                or_children.len(),
                structure.num_or_nodes()
            )));
        }
        let mut leaf_parent = BTreeMap::new();
        for (i, children) in or_children.iter_mut().enumerate() {
            if children.is_empty() || children.len() > structure.m {
                return Err(Error::Invariant(format!(
                    "or-node {i} has {} leaves, allowed 1..={}",
                    children.len(),
                    structure.m
                )));
            }
            children.sort();
            for &leaf in children.iter() {
                if leaf_parent.insert(leaf, i).is_some() {
                    return Err(Error::Invariant(format!("leaf {leaf} has two parents")));
                }
            }
        }
        let max_id = leaf_parent.keys().next_back().map_or(0, |l| l.0 + 1);
        let next_leaf = next_leaf.unwrap_or(max_id);
        if next_leaf < max_id {
            return Err(Error::Invariant(format!("next leaf id {next_leaf} below existing id {}", max_id - 1)));
        }
        let layout = build_layout(&structure, codebook.len(), &or_children);
        let psi = vec![0.0; layout.len()];
        Ok(StaogModel {
            structure,
            codebook,
            codebook_path: "codebook.json".into(),
            label: None,
            or_children,
            leaf_parent,
            next_leaf,
            layout,
            psi,
        })
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn codebook(&self) -> &Arc<Codebook> {
        &self.codebook
    }

    pub fn vocab_size(&self) -> usize {
        self.codebook.len()
    }

    /// Codebook location recorded in the model file.
    pub fn codebook_path(&self) -> &str {
        &self.codebook_path
    }

    pub fn set_codebook_path(&mut self, path: impl Into<String>) {
        self.codebook_path = path.into();
    }

    /// Positive class of a one-vs-rest model.
    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn set_label(&mut self, label: Option<String>) {
        self.label = label;
    }

    pub fn layout(&self) -> &BinLayout {
        &self.layout
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn set_psi(&mut self, psi: Vec<f64>) -> Result<()> {
        if psi.len() != self.layout.len() {
            return Err(Error::Invariant(format!("psi has {} bins, layout has {}", psi.len(), self.layout.len())));
        }
        self.psi = psi;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    pub fn num_or_nodes(&self) -> usize {
        self.or_children.len()
    }

    /// Leaves of or-node `i`, ascending id.
    pub fn children(&self, or_node: usize) -> &[LeafId] {
        &self.or_children[or_node]
    }

    pub fn or_children(&self) -> &[Vec<LeafId>] {
        &self.or_children
    }

    pub fn parent_of(&self, leaf: LeafId) -> Option<usize> {
        self.leaf_parent.get(&leaf).copied()
    }

    pub fn leaves(&self) -> impl Iterator<Item = LeafId> + '_ {
        self.leaf_parent.keys().copied()
    }

    pub fn num_leaves(&self) -> usize {
        self.leaf_parent.len()
    }

    pub fn leaf_counts(&self) -> Vec<usize> {
        self.or_children.iter().map(Vec::len).collect()
    }

    pub fn next_leaf_id(&self) -> u32 {
        self.next_leaf
    }

    /// And-node (anchor frame index) of an or-node.
    pub fn segment_of(&self, or_node: usize) -> usize {
        or_node / self.structure.cells()
    }

    /// Grid cell of an or-node.
    pub fn cell_of(&self, or_node: usize) -> usize {
        or_node % self.structure.cells()
    }

    pub fn block(&self, key: &BlockKey) -> Option<&[f64]> {
        self.layout.range(key).map(|r| &self.psi[r])
    }

    pub fn block_mut(&mut self, key: &BlockKey) -> Option<&mut [f64]> {
        self.layout.range(key).map(|r| &mut self.psi[r])
    }

    fn expect_block(&self, key: BlockKey) -> &[f64] {
        self.block(&key).unwrap_or_else(|| panic!("missing parameter block {key:?}"))
    }

    pub fn root_weights(&self) -> &[f64] {
        self.expect_block(BlockKey::Root)
    }

    pub fn and_appearance(&self, t: usize) -> &[f64] {
        self.expect_block(BlockKey::AndAppearance { t })
    }

    pub fn and_displacement(&self, t: usize) -> f64 {
        self.expect_block(BlockKey::AndDisplacement { t })[0]
    }

    pub fn leaf_appearance(&self, leaf: LeafId) -> &[f64] {
        self.expect_block(BlockKey::LeafAppearance { leaf })
    }

    pub fn leaf_deformation(&self, leaf: LeafId) -> [f64; 2] {
        let b = self.expect_block(BlockKey::LeafDeformation { leaf });
        [b[0], b[1]]
    }

    /// Spatial edge parameters for an ordered leaf pair, if the leaves sit
    /// on a spatial edge in that orientation.
    pub fn spatial_params(&self, leaf_a: LeafId, leaf_b: LeafId) -> Option<&[f64]> {
        self.block(&BlockKey::Spatial { leaf_a, leaf_b })
    }

    pub fn temporal_params(&self, leaf_a: LeafId, leaf_b: LeafId) -> Option<&[f64]> {
        self.block(&BlockKey::Temporal { leaf_a, leaf_b })
    }

    pub fn bias(&self) -> f64 {
        self.expect_block(BlockKey::Bias)[0]
    }

    /// Adds a leaf under `or_node`. Its deformation weights are copied from
    /// `donor` when given; every other new bin starts at zero.
    pub fn add_leaf(&mut self, or_node: usize, donor: Option<LeafId>) -> Result<LeafId> {
        if or_node >= self.or_children.len() {
            return Err(Error::argument(format!("no or-node {or_node}")));
        }
        if self.or_children[or_node].len() >= self.structure.m {
            return Err(Error::Invariant(format!("or-node {or_node} already has m = {} leaves", self.structure.m)));
        }
        let leaf = LeafId(self.next_leaf);
        self.next_leaf += 1;
        self.or_children[or_node].push(leaf);
        self.leaf_parent.insert(leaf, or_node);
        self.relayout();
        if let Some(donor) = donor {
            let w = self.leaf_deformation(donor);
            self.block_mut(&BlockKey::LeafDeformation { leaf }).unwrap().copy_from_slice(&w);
        }
        Ok(leaf)
    }

    /// Removes a leaf and all parameter blocks that mention it.
    pub fn remove_leaf(&mut self, leaf: LeafId) -> Result<()> {
        let or_node = self.parent_of(leaf).ok_or_else(|| Error::argument(format!("unknown leaf {leaf}")))?;
        if self.or_children[or_node].len() == 1 {
            return Err(Error::Invariant(format!("cannot remove the last leaf of or-node {or_node}")));
        }
        self.or_children[or_node].retain(|&l| l != leaf);
        self.leaf_parent.remove(&leaf);
        self.relayout();
        Ok(())
    }

    /// Renumbers leaves 0.. in or-node order, carrying their parameters.
    pub fn renumber_leaves(&mut self) {
        let mut map = BTreeMap::new();
        for children in &self.or_children {
            for &l in children {
                map.insert(l, LeafId(map.len() as u32));
            }
        }
        let old_layout = self.layout.clone();
        let old_psi = std::mem::take(&mut self.psi);
        self.or_children.iter_mut().flatten().for_each(|l| *l = map[l]);
        self.leaf_parent = self.leaf_parent.iter().map(|(l, &p)| (map[l], p)).collect();
        self.next_leaf = map.len() as u32;
        self.layout = build_layout(&self.structure, self.codebook.len(), &self.or_children);
        let mut psi = vec![0.0; self.layout.len()];
        for b in old_layout.blocks() {
            let key = rename_key(b.key, &map);
            let dst = self.layout.range(&key).expect("renamed block exists");
            psi[dst].copy_from_slice(&old_psi[b.offset..b.offset + b.len]);
        }
        self.psi = psi;
    }

    fn relayout(&mut self) {
        let layout = build_layout(&self.structure, self.codebook.len(), &self.or_children);
        self.psi = self.layout.remap(&self.psi, &layout);
        self.layout = layout;
    }

    /// Rest position of the leaves of `or_node` in a `width x height` video.
    pub fn cell_center(&self, or_node: usize, width: u32, height: u32) -> (f64, f64) {
        self.structure.cell_center(self.cell_of(or_node), width, height)
    }

    /// Checks an assignment against the graph and a video's geometry.
    pub fn check_assignment(&self, a: &LatentAssignment, width: u32, height: u32, base: &[i64], num_frames: u32) -> Result<()> {
        let s = &self.structure;
        if a.displacements.len() != s.segments || base.len() != s.segments {
            return Err(Error::Invariant(format!(
                "assignment has {} displacements, model has {} anchor frames",
                a.displacements.len(),
                s.segments
            )));
        }
        if a.parts.len() != self.num_or_nodes() {
            return Err(Error::Invariant(format!(
                "assignment has {} parts, model has {} or-nodes",
                a.parts.len(),
                self.num_or_nodes()
            )));
        }
        let allowed = s.displacements();
        let (lo, hi) = s.anchor_range(num_frames);
        let mut prev = i64::MIN;
        for (t, (&d, &b)) in a.displacements.iter().zip(base).enumerate() {
            if !allowed.contains(&d) {
                return Err(Error::Invariant(format!("displacement {d} at t = {t} is not a candidate")));
            }
            let f = b + d as i64;
            if f < lo || f >= hi || f <= prev {
                return Err(Error::Invariant(format!("anchor frame {f} at t = {t} is out of range or not increasing")));
            }
            prev = f;
        }
        for (i, part) in a.parts.iter().enumerate() {
            if self.parent_of(part.leaf) != Some(i) {
                return Err(Error::Invariant(format!("leaf {} is not a child of or-node {i}", part.leaf)));
            }
            let inside = part.x >= 0.0 && part.x < width as f64 && part.y >= 0.0 && part.y < height as f64;
            if !inside {
                return Err(Error::Invariant(format!("part of or-node {i} at ({}, {}) is outside the frame", part.x, part.y)));
            }
        }
        Ok(())
    }
}

fn rename_key(key: BlockKey, map: &BTreeMap<LeafId, LeafId>) -> BlockKey {
    match key {
        BlockKey::LeafAppearance { leaf } => BlockKey::LeafAppearance { leaf: map[&leaf] },
        BlockKey::LeafDeformation { leaf } => BlockKey::LeafDeformation { leaf: map[&leaf] },
        BlockKey::Spatial { leaf_a, leaf_b } => BlockKey::Spatial { leaf_a: map[&leaf_a], leaf_b: map[&leaf_b] },
        BlockKey::Temporal { leaf_a, leaf_b } => BlockKey::Temporal { leaf_a: map[&leaf_a], leaf_b: map[&leaf_b] },
        other => other,
    }
}

fn build_layout(structure: &Structure, vocab: usize, or_children: &[Vec<LeafId>]) -> BinLayout {
    let t_total = structure.segments;
    let mut leaves: Vec<LeafId> = or_children.iter().flatten().copied().collect();
    leaves.sort();
    let mut keys: Vec<(BlockKey, usize)> = vec![(BlockKey::Root, vocab)];
    keys.extend((0..t_total).map(|t| (BlockKey::AndAppearance { t }, vocab)));
    keys.extend((0..t_total).map(|t| (BlockKey::AndDisplacement { t }, 1)));
    keys.extend(leaves.iter().map(|&leaf| (BlockKey::LeafAppearance { leaf }, vocab)));
    keys.extend(leaves.iter().map(|&leaf| (BlockKey::LeafDeformation { leaf }, 2)));
    for (a, b) in structure.spatial_edges() {
        for &leaf_a in &or_children[a] {
            for &leaf_b in &or_children[b] {
                keys.push((BlockKey::Spatial { leaf_a, leaf_b }, SPATIAL_BINS));
            }
        }
    }
    for (a, b) in structure.temporal_edges() {
        for &leaf_a in &or_children[a] {
            for &leaf_b in &or_children[b] {
                keys.push((BlockKey::Temporal { leaf_a, leaf_b }, TEMPORAL_BINS));
            }
        }
    }
    keys.push((BlockKey::Bias, 1));
    BinLayout::from_keys(keys)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codebook(k: usize) -> Arc<Codebook> {
        Arc::new(Codebook::new((0..k).map(|i| vec![i as f64]).collect()).unwrap())
    }

    #[test]
    fn default_layout_sizes() {
        let m = StaogModel::new(Structure::default(), codebook(5)).unwrap();
        // 12 or-nodes, 1 leaf each; 4 spatial + 4 temporal pairs per link
        let s = m.structure();
        assert_eq!(s.spatial_edges().len(), 3 * 4);
        assert_eq!(s.temporal_edges().len(), 2 * 4);
        let expect = 5 + 3 * 5 + 3 + 12 * 5 + 12 * 2 + 12 * 8 + 8 * 4 + 1;
        assert_eq!(m.dim(), expect);
        assert_eq!(m.layout().blocks().last().unwrap().key, BlockKey::Bias);
    }

    #[test]
    fn grid_edges_are_four_neighbors() {
        let s = Structure { segments: 2, grid: [2, 3], ..Structure::default() };
        assert_eq!(s.spatial_edges()[..7], [(0, 1), (0, 3), (1, 2), (1, 4), (2, 5), (3, 4), (4, 5)]);
        assert_eq!(s.temporal_edges(), (0..6).map(|c| (c, c + 6)).collect::<Vec<_>>());
    }

    #[test]
    fn add_and_remove_keep_parameters() {
        let mut m = StaogModel::new(Structure::default(), codebook(3)).unwrap();
        let psi: Vec<f64> = (0..m.dim()).map(|i| i as f64 * 0.5).collect();
        m.set_psi(psi).unwrap();
        let before = m.clone();
        let leaf = m.add_leaf(4, Some(LeafId(4))).unwrap();
        assert_eq!(leaf, LeafId(12));
        assert_eq!(m.children(4), &[LeafId(4), LeafId(12)]);
        assert_eq!(m.leaf_deformation(leaf), before.leaf_deformation(LeafId(4)));
        assert!(m.leaf_appearance(leaf).iter().all(|&w| w == 0.0));
        for b in before.layout().blocks() {
            assert_eq!(m.block(&b.key).unwrap(), before.block(&b.key).unwrap());
        }
        m.remove_leaf(leaf).unwrap();
        assert_eq!(m.psi(), before.psi());
        assert!(m.remove_leaf(LeafId(4)).is_err());
        // ids are not reused
        assert_eq!(m.add_leaf(0, None).unwrap(), LeafId(13));
    }

    #[test]
    fn leaf_cap_enforced() {
        let s = Structure { segments: 1, grid: [1, 1], m: 2, ..Structure::default() };
        let mut m = StaogModel::new(s, codebook(2)).unwrap();
        m.add_leaf(0, None).unwrap();
        assert!(m.add_leaf(0, None).is_err());
    }

    #[test]
    fn renumber_carries_blocks() {
        let mut m = StaogModel::new(Structure::default(), codebook(3)).unwrap();
        m.add_leaf(0, None).unwrap();
        m.remove_leaf(LeafId(0)).unwrap();
        let psi: Vec<f64> = (0..m.dim()).map(|i| (i as f64).sin()).collect();
        m.set_psi(psi).unwrap();
        let app = m.leaf_appearance(LeafId(12)).to_vec();
        m.renumber_leaves();
        assert_eq!(m.children(0), &[LeafId(0)]);
        assert_eq!(m.leaf_appearance(LeafId(0)), &app[..]);
        assert_eq!(m.next_leaf_id(), 12);
    }

    #[test]
    fn structure_validation() {
        assert!(Structure::default().validate().is_ok());
        assert!(Structure { steps: vec![2, 2], ..Structure::default() }.validate().is_err());
        assert!(Structure { steps: vec![0], ..Structure::default() }.validate().is_err());
        assert!(Structure { grid: [0, 2], ..Structure::default() }.validate().is_err());
        assert_eq!(Structure::default().displacements()[0], 0);
        assert_eq!(Structure::default().cell_center(3, 160, 120), (120.0, 90.0));
    }
}
