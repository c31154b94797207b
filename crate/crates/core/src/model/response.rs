//! Node and edge responses, evaluated directly from a video.

use super::relations::{edge_response, leaf_time_span, spatial_relation_feature, temporal_predicate_feature};
use super::{LatentAssignment, LeafId, PartChoice, StaogModel, SPATIAL_BINS, TEMPORAL_BINS};
use crate::error::{Error, Result};
use crate::features::{initial_anchors, IndexedVideo, Region3D};
use crate::sparse::SparseVec;

/// Leaf response `w_l . hist - w_s . (|p_x - q_x|, |p_y - q_y|)`.
pub fn leaf_score(appearance: &[f64], deformation: [f64; 2], hist: &SparseVec, p: (f64, f64), q: (f64, f64)) -> f64 {
    hist.dot_dense(appearance) - deformation[0] * (p.0 - q.0).abs() - deformation[1] * (p.1 - q.1).abs()
}

/// Anchor displacement penalty `-w_tau * |delta|`.
pub fn temporal_penalty_score(weight: f64, delta: i32) -> f64 {
    -weight * (delta as f64).abs()
}

impl StaogModel {
    fn check_position(&self, video: &IndexedVideo, p: (f64, f64)) -> Result<()> {
        let inside = p.0 >= 0.0 && p.0 < video.width as f64 && p.1 >= 0.0 && p.1 < video.height as f64;
        if inside {
            Ok(())
        } else {
            Err(Error::argument(format!(
                "part position ({}, {}) outside {}x{}",
                p.0, p.1, video.width, video.height
            )))
        }
    }

    /// Response of `leaf` detected at `p` around anchor `frame`.
    pub fn leaf_response(&self, video: &IndexedVideo, frame: i64, leaf: LeafId, p: (f64, f64)) -> Result<f64> {
        self.check_position(video, p)?;
        let or_node = self.parent_of(leaf).ok_or_else(|| Error::argument(format!("unknown leaf {leaf}")))?;
        let q = self.cell_center(or_node, video.width, video.height);
        let hist = video.region_histogram(&self.structure.part_region(frame, p));
        Ok(leaf_score(self.leaf_appearance(leaf), self.leaf_deformation(leaf), &hist, p, q))
    }

    /// Response of the single active child of `or_node`. `activation` has
    /// one flag per child, in [`StaogModel::children`] order.
    pub fn or_response(
        &self,
        video: &IndexedVideo,
        frame: i64,
        or_node: usize,
        activation: &[bool],
        p: (f64, f64),
    ) -> Result<f64> {
        let children = self.children(or_node);
        if activation.len() != children.len() {
            return Err(Error::Invariant(format!(
                "or-node {or_node}: activation has {} entries for {} children",
                activation.len(),
                children.len()
            )));
        }
        let active: Vec<usize> = (0..activation.len()).filter(|&n| activation[n]).collect();
        match active[..] {
            [n] => self.leaf_response(video, frame, children[n], p),
            _ => Err(Error::Invariant(format!(
                "or-node {or_node}: {} active children, expected exactly one",
                active.len()
            ))),
        }
    }

    /// Frame-level appearance plus the responses of and-node `t`'s
    /// or-nodes, whose choices are `parts` (cell order).
    pub fn and_response(&self, video: &IndexedVideo, t: usize, frame: i64, parts: &[PartChoice]) -> Result<f64> {
        let k = self.structure.cells();
        if parts.len() != k {
            return Err(Error::Invariant(format!("and-node {t}: {} parts for {k} or-nodes", parts.len())));
        }
        let hist = video.region_histogram(&Region3D::full_frame(frame, self.structure.rho));
        let mut total = hist.dot_dense(self.and_appearance(t));
        for (cell, part) in parts.iter().enumerate() {
            let or_node = t * k + cell;
            if self.parent_of(part.leaf) != Some(or_node) {
                return Err(Error::Invariant(format!("leaf {} is not a child of or-node {or_node}", part.leaf)));
            }
            total += self.leaf_response(video, frame, part.leaf, part.position())?;
        }
        Ok(total)
    }

    pub fn temporal_penalty(&self, t: usize, delta: i32) -> f64 {
        temporal_penalty_score(self.and_displacement(t), delta)
    }

    /// Whole-video appearance plus every and-node response and penalty.
    pub fn root_response(&self, video: &IndexedVideo, a: &LatentAssignment) -> Result<f64> {
        let base = self.checked_anchors(video, a)?;
        let k = self.structure.cells();
        let mut total = video.video_histogram().dot_dense(self.root_weights());
        for (t, &delta) in a.displacements.iter().enumerate() {
            let frame = base[t] + delta as i64;
            total += self.and_response(video, t, frame, &a.parts[t * k..(t + 1) * k])?;
            total += self.temporal_penalty(t, delta);
        }
        Ok(total)
    }

    /// Relation feature of the parts on spatial edge `(or_a, or_b)`.
    pub fn spatial_feature(
        &self,
        or_a: usize,
        p_a: (f64, f64),
        or_b: usize,
        p_b: (f64, f64),
        width: u32,
        height: u32,
    ) -> [f64; SPATIAL_BINS] {
        let q_a = self.cell_center(or_a, width, height);
        let q_b = self.cell_center(or_b, width, height);
        spatial_relation_feature(p_a, q_a, p_b, q_b, self.structure.near_radius)
    }

    /// Predicate feature between consecutive anchor frames.
    pub fn temporal_feature(&self, frame_a: i64, frame_b: i64) -> [f64; TEMPORAL_BINS] {
        let rho = self.structure.rho;
        temporal_predicate_feature(leaf_time_span(frame_a, 0, rho), leaf_time_span(frame_b, 0, rho), rho)
    }

    /// Sum of spatial edge responses over the active leaf pairs.
    pub fn spatial_edges_response(&self, a: &LatentAssignment, width: u32, height: u32) -> f64 {
        self.structure
            .spatial_edges()
            .into_iter()
            .map(|(i, j)| {
                let (pa, pb) = (a.parts[i], a.parts[j]);
                let f = self.spatial_feature(i, pa.position(), j, pb.position(), width, height);
                self.spatial_params(pa.leaf, pb.leaf).map_or(0.0, |beta| edge_response(beta, &f))
            })
            .sum()
    }

    /// Sum of temporal edge responses over the active leaf pairs.
    pub fn temporal_edges_response(&self, a: &LatentAssignment, base: &[i64]) -> f64 {
        let frames = a.anchor_frames(base);
        let k = self.structure.cells();
        self.structure
            .temporal_edges()
            .into_iter()
            .map(|(i, j)| {
                let t = i / k;
                let f = self.temporal_feature(frames[t], frames[t + 1]);
                self.temporal_params(a.parts[i].leaf, a.parts[j].leaf).map_or(0.0, |beta| edge_response(beta, &f))
            })
            .sum()
    }

    /// Total model response: root, every active edge once, and the bias.
    pub fn global_response(&self, video: &IndexedVideo, a: &LatentAssignment) -> Result<f64> {
        let base = self.checked_anchors(video, a)?;
        Ok(self.root_response(video, a)?
            + self.spatial_edges_response(a, video.width, video.height)
            + self.temporal_edges_response(a, &base)
            + self.bias())
    }

    pub(crate) fn checked_anchors(&self, video: &IndexedVideo, a: &LatentAssignment) -> Result<Vec<i64>> {
        if video.vocab_size() != self.vocab_size() {
            return Err(Error::format(format!(
                "video {} indexed with {} words, model uses {}",
                video.id,
                video.vocab_size(),
                self.vocab_size()
            )));
        }
        let base = initial_anchors(video.num_frames, self.structure.segments)?;
        self.check_assignment(a, video.width, video.height, &base, video.num_frames)?;
        Ok(base)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::features::{Codebook, FeatureVideo, InterestPoint};
    use crate::model::{BlockKey, Structure};

    #[test]
    fn leaf_score_examples() {
        let h = SparseVec::from_dense(&[0.5, 0.5]);
        assert_eq!(leaf_score(&[0.0, 0.0], [0.0, 0.0], &h, (3.0, 4.0), (0.0, 0.0)), 0.0);
        assert_eq!(leaf_score(&[1.0, 0.0], [9.0, 9.0], &h, (7.0, 7.0), (7.0, 7.0)), 0.5);
        let h = SparseVec::from_dense(&[1.0, 0.0]);
        let r = leaf_score(&[0.5, 0.5], [0.1, 0.2], &h, (12.0, 9.0), (10.0, 10.0));
        assert!((r - 0.1).abs() < 1e-15);
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(temporal_penalty_score(0.3, 0), 0.0);
        assert!((temporal_penalty_score(0.05, -4) - -0.2).abs() < 1e-15);
        assert_eq!(temporal_penalty_score(0.0, 8), 0.0);
    }

    fn one_cell_model(leaves: usize) -> (StaogModel, IndexedVideo) {
        let cb = Arc::new(Codebook::new(vec![vec![0.0], vec![1.0]]).unwrap());
        let s = Structure { segments: 1, grid: [1, 1], steps: vec![], ..Structure::default() };
        let mut m = StaogModel::new(s, cb.clone()).unwrap();
        for _ in 1..leaves {
            m.add_leaf(0, None).unwrap();
        }
        let points = (0..4)
            .map(|n| InterestPoint { frame: 10, x: 50.0, y: 50.0, descriptor: vec![(n % 2) as f64] })
            .collect();
        let v = FeatureVideo {
            id: "v".into(),
            label: None,
            width: 100,
            height: 100,
            num_frames: 20,
            descriptor_dim: 1,
            points,
        };
        (m, IndexedVideo::new(&v, &cb).unwrap())
    }

    #[test]
    fn or_response_selects_active_child() {
        let (mut m, v) = one_cell_model(2);
        m.block_mut(&BlockKey::LeafAppearance { leaf: LeafId(0) }).unwrap().copy_from_slice(&[0.4, 0.0]);
        m.block_mut(&BlockKey::LeafAppearance { leaf: LeafId(1) }).unwrap().copy_from_slice(&[0.0, 1.8]);
        // part histogram is (0.5, 0.5)
        let r0 = m.or_response(&v, 10, 0, &[true, false], (50.0, 50.0)).unwrap();
        let r1 = m.or_response(&v, 10, 0, &[false, true], (50.0, 50.0)).unwrap();
        assert!((r0 - 0.2).abs() < 1e-15 && (r1 - 0.9).abs() < 1e-15);
        assert!(matches!(m.or_response(&v, 10, 0, &[false, false], (50.0, 50.0)), Err(Error::Invariant(_))));
        assert!(m.or_response(&v, 10, 0, &[true, true], (50.0, 50.0)).is_err());
    }

    #[test]
    fn zero_model_scores_zero() {
        let (m, v) = one_cell_model(1);
        let a = LatentAssignment { displacements: vec![0], parts: vec![PartChoice { leaf: LeafId(0), x: 50.0, y: 50.0 }] };
        assert_eq!(m.global_response(&v, &a).unwrap(), 0.0);
    }

    #[test]
    fn root_and_global_hand_values() {
        let (mut m, v) = one_cell_model(1);
        m.block_mut(&BlockKey::Root).unwrap().copy_from_slice(&[2.0, 0.0]);
        m.block_mut(&BlockKey::AndAppearance { t: 0 }).unwrap().copy_from_slice(&[0.0, 0.6]);
        m.block_mut(&BlockKey::LeafDeformation { leaf: LeafId(0) }).unwrap().copy_from_slice(&[0.01, 0.02]);
        m.block_mut(&BlockKey::Bias).unwrap()[0] = -0.25;
        let a = LatentAssignment { displacements: vec![0], parts: vec![PartChoice { leaf: LeafId(0), x: 40.0, y: 30.0 }] };
        // root 2 * 0.5, and 0.6 * 0.5, leaf -(0.01 * 10 + 0.02 * 20)
        let root = m.root_response(&v, &a).unwrap();
        assert!((root - (1.0 + 0.3 - 0.5)).abs() < 1e-12);
        assert!((m.global_response(&v, &a).unwrap() - (root - 0.25)).abs() < 1e-15);
    }
}
