//! Pairwise relation features for contextual edges.

use super::layout::{SPATIAL_BINS, TEMPORAL_BINS};

pub const ABOVE: usize = 0;
pub const BELOW: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const NEAR: usize = 4;
pub const FAR: usize = 5;
pub const CLOCKWISE: usize = 6;
pub const ANTI_CLOCKWISE: usize = 7;

pub const INTERSECT: usize = 0;
pub const AFTER: usize = 1;
pub const MEETS: usize = 2;
pub const INTERRUPT: usize = 3;

/// Eight binary spatial relations of part `b` relative to part `a`, in bin
/// order (above, below, left, right, near, far, clockwise, anti-clockwise).
///
/// `p_*` are detected positions, `q_*` the parts' rest positions. With
/// `o = p_b - p_a`: near iff `|o| <= near_radius`; the direction is taken
/// along the dominant axis (vertical wins ties, `o_y < 0` is above);
/// anti-clockwise iff `cross(q_b - q_a, o) > 0`, otherwise clockwise.
/// Image coordinates: y grows downward.
pub fn spatial_relation_feature(
    p_a: (f64, f64),
    q_a: (f64, f64),
    p_b: (f64, f64),
    q_b: (f64, f64),
    near_radius: f64,
) -> [f64; SPATIAL_BINS] {
    let mut f = [0.0; SPATIAL_BINS];
    let (ox, oy) = (p_b.0 - p_a.0, p_b.1 - p_a.1);
    if oy.abs() >= ox.abs() {
        f[if oy < 0.0 { ABOVE } else { BELOW }] = 1.0;
    } else {
        f[if ox < 0.0 { LEFT } else { RIGHT }] = 1.0;
    }
    f[if (ox * ox + oy * oy).sqrt() <= near_radius { NEAR } else { FAR }] = 1.0;
    let (rx, ry) = (q_b.0 - q_a.0, q_b.1 - q_a.1);
    let theta = rx * oy - ry * ox;
    f[if theta > 0.0 { ANTI_CLOCKWISE } else { CLOCKWISE }] = 1.0;
    f
}

/// Frame interval `(start, end)` of a part volume at anchor `tau + delta`.
pub fn leaf_time_span(tau: i64, delta: i32, span: u32) -> (f64, f64) {
    let center = (tau + delta as i64) as f64;
    let half = span as f64 / 2.0;
    (center - half, center + half)
}

/// One-hot interval predicate between an earlier part `a` and a later part
/// `b`, bins (intersect, after, meets, interrupt). The gap
/// `b.start - a.end == span` counts as `after`, so exactly one bin is set.
pub fn temporal_predicate_feature(a: (f64, f64), b: (f64, f64), span: u32) -> [f64; TEMPORAL_BINS] {
    let mut f = [0.0; TEMPORAL_BINS];
    let (a_end, b_start) = (a.1, b.0);
    let bin = if b_start < a_end {
        INTERSECT
    } else if b_start == a_end {
        MEETS
    } else if b_start <= a_end + span as f64 {
        AFTER
    } else {
        INTERRUPT
    };
    f[bin] = 1.0;
    f
}

pub fn edge_response(params: &[f64], feature: &[f64]) -> f64 {
    params.iter().zip(feature).map(|(b, f)| b * f).sum()
}
