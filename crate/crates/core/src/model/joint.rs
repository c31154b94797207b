//! The joint feature map Φ(X, L), laid out bin for bin like ψ.

use super::{BlockKey, LatentAssignment, StaogModel};
use crate::error::Result;
use crate::features::{IndexedVideo, Region3D};
use crate::sparse::SparseVec;

impl StaogModel {
    /// Φ(X, L) with `ψ · Φ = global_response(X, L)`.
    pub fn joint_feature(&self, video: &IndexedVideo, a: &LatentAssignment) -> Result<SparseVec> {
        let base = self.checked_anchors(video, a)?;
        let s = &self.structure;
        let k = s.cells();
        let frames = a.anchor_frames(&base);
        let offset = |key: BlockKey| self.layout.get(&key).expect("block in layout").offset;
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let put_hist = |entries: &mut Vec<(usize, f64)>, start: usize, h: &SparseVec| {
            entries.extend(h.iter().map(|(i, v)| (start + i, v)));
        };

        put_hist(&mut entries, offset(BlockKey::Root), &video.video_histogram());
        for (t, &delta) in a.displacements.iter().enumerate() {
            let h = video.region_histogram(&Region3D::full_frame(frames[t], s.rho));
            put_hist(&mut entries, offset(BlockKey::AndAppearance { t }), &h);
            entries.push((offset(BlockKey::AndDisplacement { t }), -(delta as f64).abs()));
        }
        for (i, part) in a.parts.iter().enumerate() {
            let frame = frames[i / k];
            let p = part.position();
            let h = video.region_histogram(&s.part_region(frame, p));
            put_hist(&mut entries, offset(BlockKey::LeafAppearance { leaf: part.leaf }), &h);
            let q = self.cell_center(i, video.width, video.height);
            let d = offset(BlockKey::LeafDeformation { leaf: part.leaf });
            entries.push((d, -(p.0 - q.0).abs()));
            entries.push((d + 1, -(p.1 - q.1).abs()));
        }
        for (i, j) in s.spatial_edges() {
            let (pa, pb) = (a.parts[i], a.parts[j]);
            let f = self.spatial_feature(i, pa.position(), j, pb.position(), video.width, video.height);
            let start = offset(BlockKey::Spatial { leaf_a: pa.leaf, leaf_b: pb.leaf });
            entries.extend(f.iter().enumerate().map(|(n, v)| (start + n, *v)));
        }
        for (i, j) in s.temporal_edges() {
            let t = i / k;
            let f = self.temporal_feature(frames[t], frames[t + 1]);
            let start = offset(BlockKey::Temporal { leaf_a: a.parts[i].leaf, leaf_b: a.parts[j].leaf });
            entries.extend(f.iter().enumerate().map(|(n, v)| (start + n, *v)));
        }
        entries.push((offset(BlockKey::Bias), 1.0));
        Ok(SparseVec::from_entries(entries))
    }

    /// Φ(X, y, L): the joint feature for `y = +1`, zero for `y = -1`.
    pub fn labeled_joint_feature(
        &self,
        video: &IndexedVideo,
        positive: bool,
        a: &LatentAssignment,
    ) -> Result<SparseVec> {
        if positive {
            self.joint_feature(video, a)
        } else {
            Ok(SparseVec::new())
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::features::{Codebook, FeatureVideo, IndexedVideo, InterestPoint};
    use crate::model::{LatentAssignment, LeafId, PartChoice, StaogModel, Structure};

    fn setup() -> (StaogModel, IndexedVideo) {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cb = Arc::new(Codebook::new((0..6).map(|i| vec![i as f64, 0.0]).collect()).unwrap());
        let s = Structure { segments: 2, grid: [1, 2], ..Structure::default() };
        let mut m = StaogModel::new(s, cb.clone()).unwrap();
        m.add_leaf(1, Some(LeafId(1))).unwrap();
        let psi = (0..m.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        m.set_psi(psi).unwrap();
        let points = (0..300)
            .map(|_| InterestPoint {
                frame: rng.random_range(0..40),
                x: rng.random_range(0.0..120.0),
                y: rng.random_range(0.0..80.0),
                descriptor: vec![rng.random_range(0.0..6.0), 0.0],
            })
            .collect();
        let v = FeatureVideo { id: "r".into(), label: None, width: 120, height: 80, num_frames: 40, descriptor_dim: 2, points };
        (m, IndexedVideo::new(&v, &cb).unwrap())
    }

    fn assignment(leaf_b: u32, deltas: [i32; 2]) -> LatentAssignment {
        LatentAssignment {
            displacements: deltas.to_vec(),
            parts: vec![
                PartChoice { leaf: LeafId(0), x: 25.0, y: 40.0 },
                PartChoice { leaf: LeafId(leaf_b), x: 100.0, y: 35.0 },
                PartChoice { leaf: LeafId(2), x: 30.0, y: 50.0 },
                PartChoice { leaf: LeafId(3), x: 91.0, y: 20.0 },
            ],
        }
    }

    #[test]
    fn dot_matches_global_response() {
        let (m, v) = setup();
        for a in [assignment(1, [0, 0]), assignment(4, [2, -4]), assignment(4, [-2, 2]), assignment(1, [10, -4])] {
            let phi = m.joint_feature(&v, &a).unwrap();
            let direct = m.global_response(&v, &a).unwrap();
            assert!((phi.dot_dense(m.psi()) - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn negative_label_is_zero() {
        let (m, v) = setup();
        assert!(m.labeled_joint_feature(&v, false, &assignment(1, [0, 0])).unwrap().is_zero());
        let pos = m.labeled_joint_feature(&v, true, &assignment(1, [0, 0])).unwrap();
        assert_eq!(pos, m.joint_feature(&v, &assignment(1, [0, 0])).unwrap());
    }

    #[test]
    fn inactive_leaf_blocks_are_zero() {
        let (m, v) = setup();
        let phi = m.joint_feature(&v, &assignment(1, [0, 0])).unwrap();
        for b in m.layout().blocks() {
            let mentions_4 = format!("{:?}", b.key).contains("LeafId(4)");
            if mentions_4 {
                assert!((b.offset..b.offset + b.len).all(|n| phi.get(n) == 0.0), "{:?}", b.key);
            }
        }
    }

    #[test]
    fn invalid_assignment_rejected() {
        let (m, v) = setup();
        // leaf 4 belongs to or-node 1, not 3
        let mut a = assignment(1, [0, 0]);
        a.parts[3].leaf = LeafId(4);
        assert!(m.joint_feature(&v, &a).is_err());
        assert!(m.joint_feature(&v, &assignment(1, [3, 0])).is_err());
    }
}
