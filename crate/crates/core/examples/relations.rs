//! Spatial relation and temporal predicate features between two parts.
//!
//! `cargo run --example relations`

use staog::model::relations::{leaf_time_span, spatial_relation_feature, temporal_predicate_feature};

const SPATIAL: [&str; 8] = ["above", "below", "left", "right", "near", "far", "cw", "acw"];
const TEMPORAL: [&str; 4] = ["intersect", "after", "meets", "interrupt"];

fn names<const N: usize>(f: &[f64; N], labels: &[&str; N]) -> String {
    f.iter().zip(labels).filter(|(v, _)| **v == 1.0).map(|(_, l)| *l).collect::<Vec<_>>().join(" ")
}

fn main() {
    // part b sits at rest to the right of part a
    let (q_a, q_b) = ((40.0, 30.0), (120.0, 30.0));
    let cases = [
        ("at rest", (40.0, 30.0), (120.0, 30.0)),
        ("b lifted", (40.0, 60.0), (70.0, 0.0)),
        ("b swung below a", (40.0, 30.0), (50.0, 110.0)),
        ("b far above", (40.0, 110.0), (60.0, 0.0)),
    ];
    for (label, p_a, p_b) in cases {
        let f = spatial_relation_feature(p_a, q_a, p_b, q_b, 90.0);
        println!("{label:<16} p_a={p_a:?} p_b={p_b:?} -> {}", names(&f, &SPATIAL));
    }

    let rho = 15;
    for (frame_a, frame_b) in [(10, 20), (10, 25), (10, 35), (10, 40), (10, 50)] {
        let a = leaf_time_span(frame_a, 0, rho);
        let b = leaf_time_span(frame_b, 0, rho);
        let f = temporal_predicate_feature(a, b, rho);
        println!("frames {frame_a} and {frame_b}: spans {a:?} and {b:?} -> {}", names(&f, &TEMPORAL));
    }
}
