//! Property-based invariants over randomized inputs.

mod common;

use proptest::prelude::*;
use staog::inference::candidate_positions;
use staog::model::relations::{spatial_relation_feature, temporal_predicate_feature};
use staog::model::BlockKey;
use staog::numerics::{kmeans, qp_solve, Constraint};
use staog::sparse::SparseVec;
use staog::{infer, PreparedVideo, StaogModel, Structure};

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![(-200i32..200).prop_map(f64::from), -200.0..200.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn spatial_feature_is_three_hot(
        pa in (coord(), coord()), qa in (coord(), coord()),
        pb in (coord(), coord()), qb in (coord(), coord()),
        radius in 0.0..150.0f64,
    ) {
        let f = spatial_relation_feature(pa, qa, pb, qb, radius);
        prop_assert!(f.iter().all(|&x| x == 0.0 || x == 1.0));
        prop_assert_eq!(f[0..4].iter().sum::<f64>(), 1.0);
        prop_assert_eq!(f[4..6].iter().sum::<f64>(), 1.0);
        prop_assert_eq!(f[6..8].iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn swapping_parts_flips_direction(
        pa in (coord(), coord()), qa in (coord(), coord()),
        pb in (coord(), coord()), qb in (coord(), coord()),
    ) {
        prop_assume!(pa != pb);
        let ab = spatial_relation_feature(pa, qa, pb, qb, 50.0);
        let ba = spatial_relation_feature(pb, qb, pa, qa, 50.0);
        // above <-> below, left <-> right; distance is symmetric
        prop_assert_eq!([ab[0], ab[1], ab[2], ab[3]], [ba[1], ba[0], ba[3], ba[2]]);
        prop_assert_eq!(&ab[4..6], &ba[4..6]);
    }

    #[test]
    fn temporal_feature_is_one_hot(fa in 0i64..200, gap in -30i64..60, span in 1u32..20) {
        let half = span as f64 / 2.0;
        let a = (fa as f64 - half, fa as f64 + half);
        let fb = fa + gap;
        let b = (fb as f64 - half, fb as f64 + half);
        let f = temporal_predicate_feature(a, b, span);
        prop_assert_eq!(f.iter().sum::<f64>(), 1.0);
        prop_assert!(f.iter().all(|&x| x == 0.0 || x == 1.0));
    }

    #[test]
    fn sparse_matches_dense(a in prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], 0..30),
                            b in prop::collection::vec(-5.0..5.0f64, 30)) {
        let s = SparseVec::from_dense(&a);
        prop_assert_eq!(s.to_dense(a.len()), a.clone());
        let dense: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        prop_assert!((s.dot_dense(&b) - dense).abs() < 1e-9);
        let t = SparseVec::from_dense(&b[..a.len()]);
        prop_assert!((s.dot(&t) - dense).abs() < 1e-9);
        prop_assert!(s.sub(&s).is_zero());
    }

    #[test]
    fn candidates_inside_sorted_unique(
        w in 1u32..200, h in 1u32..200, radius in 0u32..50, stride in 1u32..20,
        rows in 1usize..4, cols in 1usize..4, cell_pick in 0usize..16,
    ) {
        let s = Structure { grid: [rows, cols], search_radius: radius, search_stride: stride, ..Structure::default() };
        let cell = cell_pick % (rows * cols);
        let c = candidate_positions(&s, cell, w, h);
        prop_assert!(!c.is_empty());
        prop_assert!(c.iter().all(|&(x, y)| x >= 0.0 && x <= (w - 1) as f64 && y >= 0.0 && y <= (h - 1) as f64));
        for pair in c.windows(2) {
            prop_assert!(pair[0] != pair[1]);
        }
        let mut sorted = c.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        prop_assert_eq!(sorted.len(), c.len());
    }

    #[test]
    fn qp_solution_is_feasible_and_tight(
        rows in prop::collection::vec((prop::collection::vec(-3.0..3.0f64, 4), 0.0..3.0f64, 0usize..3), 1..8),
        c in 0.01..5.0f64,
    ) {
        let cons: Vec<Constraint> = rows
            .iter()
            .map(|(coef, loss, group)| Constraint { coef: SparseVec::from_dense(coef), loss: *loss, group: *group })
            .collect();
        let s = qp_solve(cons.clone(), c, 4);
        prop_assert!(s.alphas.iter().all(|&a| a >= 0.0));
        for g in 0..3 {
            let total: f64 = cons.iter().zip(&s.alphas).filter(|(k, _)| k.group == g).map(|(_, a)| a).sum();
            prop_assert!(total <= c + 1e-9);
        }
        prop_assert!(s.dual_objective <= s.primal_objective + 1e-9);
        prop_assert!(s.gap <= 1e-6 * (1.0 + s.primal_objective.abs()));
        // psi is the multiplier-weighted sum of coefficients
        let mut psi = vec![0.0; 4];
        for (k, a) in cons.iter().zip(&s.alphas) {
            k.coef.axpy_into(*a, &mut psi);
        }
        prop_assert!(psi.iter().zip(&s.psi).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn kmeans_assigns_nearest(points in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 2), 3..40),
                              k in 1usize..4, seed in any::<u64>()) {
        let r = kmeans(&points, k, seed, 100).unwrap();
        for (p, &a) in points.iter().zip(&r.assignment) {
            let d = |c: &Vec<f64>| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
            let mine = d(&r.centroids[a]);
            prop_assert!(r.centroids.iter().all(|c| mine <= d(c) + 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inferred_score_equals_rescore(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let cb = common::line_codebook(6);
        let structure = common::small_structure(&mut rng);
        let model = common::random_model(&mut rng, structure, cb.clone(), 3);
        let video = common::random_video(&mut rng, &cb, 80, 60, 30, 150);
        let pv = PreparedVideo::new(model.structure(), video.clone()).unwrap();
        let r = infer(&model, &pv).unwrap();
        let direct = model.global_response(&video, &r.assignment).unwrap();
        prop_assert!((r.score - direct).abs() < 1e-9);
        let phi = model.joint_feature(&video, &r.assignment).unwrap();
        prop_assert!((phi.dot_dense(model.psi()) - r.score).abs() < 1e-9);
    }

    #[test]
    fn model_json_round_trips(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let cb = common::line_codebook(5);
        let structure = common::small_structure(&mut rng);
        let model = common::random_model(&mut rng, structure, cb.clone(), 4);
        let text = model.to_json();
        let back = StaogModel::from_json(&text, cb).unwrap();
        prop_assert_eq!(back.psi(), model.psi());
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn leaf_edits_keep_other_weights(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let cb = common::line_codebook(5);
        let structure = common::small_structure(&mut rng);
        let model = common::random_model(&mut rng, structure, cb, 2);
        let mut grown = model.clone();
        let donor = model.children(0)[0];
        let new = grown.add_leaf(0, Some(donor)).unwrap();
        for b in model.layout().blocks() {
            prop_assert_eq!(grown.block(&b.key), model.block(&b.key));
        }
        let appearance = BlockKey::LeafAppearance { leaf: new };
        prop_assert!(grown.block(&appearance).unwrap().iter().all(|&x| x == 0.0));
        prop_assert_eq!(
            grown.block(&BlockKey::LeafDeformation { leaf: new }),
            model.block(&BlockKey::LeafDeformation { leaf: donor })
        );
        grown.remove_leaf(new).unwrap();
        prop_assert_eq!(grown.psi(), model.psi());
        prop_assert_eq!(grown.layout(), model.layout());
    }
}
