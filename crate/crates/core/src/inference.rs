//! Cascaded inference: part detection per leaf, hypothesis enumeration per
//! (anchor frame, displacement), then exact max-sum over the chain of anchor
//! frames. [`infer_bruteforce`] scores every configuration directly and is
//! the reference the cascade is tested against.
//!
//! Ties are resolved the same way everywhere. Scores within [`TIE_EPS`] are
//! equal; among equal scores the configuration whose per-frame keys
//! `(displacement index, leaf ids)` are lexicographically smallest wins,
//! frame by frame. Among part positions with equal response the smallest
//! displacement from the rest position wins, then the smallest `(x, y)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{initial_anchors, IndexedVideo, Region3D};
use crate::model::relations::edge_response;
use crate::model::{leaf_score, LatentAssignment, LeafId, PartChoice, StaogModel, Structure};
use crate::sparse::SparseVec;

/// Scores closer than this are treated as tied.
pub const TIE_EPS: f64 = 1e-12;

/// Upper bound on configurations [`infer_bruteforce`] will enumerate.
pub const BRUTEFORCE_LIMIT: u64 = 1_000_000;

/// Search positions of a cell in tie-break order.
pub fn candidate_positions(structure: &Structure, cell: usize, width: u32, height: u32) -> Vec<(f64, f64)> {
    let q = structure.cell_center(cell, width, height);
    let reach = (structure.search_radius / structure.search_stride) as i64;
    let stride = structure.search_stride as f64;
    let (x_max, y_max) = ((width - 1) as f64, (height - 1) as f64);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for i in -reach..=reach {
        for j in -reach..=reach {
            let x = (q.0 + i as f64 * stride).clamp(0.0, x_max);
            let y = (q.1 + j as f64 * stride).clamp(0.0, y_max);
            out.push((x, y));
        }
    }
    let norm = |p: &(f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
    out.sort_by(|a, b| {
        norm(a)
            .total_cmp(&norm(b))
            .then(a.0.total_cmp(&b.0))
            .then(a.1.total_cmp(&b.1))
    });
    out.dedup();
    out
}

struct FrameCache {
    and_hist: SparseVec,
    // per cell, parallel to candidate_positions
    part_hists: Vec<Vec<SparseVec>>,
}

/// A video with every ψ-independent histogram the cascade needs computed
/// once: the whole-video histogram, the frame histogram of every reachable
/// anchor frame, and the part histogram at every search position.
pub struct PreparedVideo {
    video: IndexedVideo,
    structure: Structure,
    base: Vec<i64>,
    root_hist: SparseVec,
    positions: Vec<Vec<(f64, f64)>>,
    frames: BTreeMap<i64, FrameCache>,
}

impl PreparedVideo {
    pub fn new(structure: &Structure, video: IndexedVideo) -> Result<Self> {
        structure.validate()?;
        let base = initial_anchors(video.num_frames, structure.segments)?;
        let k = structure.cells();
        let positions: Vec<Vec<(f64, f64)>> =
            (0..k).map(|c| candidate_positions(structure, c, video.width, video.height)).collect();
        let (lo, hi) = structure.anchor_range(video.num_frames);
        let mut frames = BTreeMap::new();
        for &b in &base {
            for d in structure.displacements() {
                let f = b + d as i64;
                if f < lo || f >= hi || frames.contains_key(&f) {
                    continue;
                }
                let and_hist = video.region_histogram(&Region3D::full_frame(f, structure.rho));
                let part_hists = positions
                    .iter()
                    .map(|ps| ps.iter().map(|&p| video.region_histogram(&structure.part_region(f, p))).collect())
                    .collect();
                frames.insert(f, FrameCache { and_hist, part_hists });
            }
        }
        let root_hist = video.video_histogram();
        Ok(PreparedVideo { video, structure: structure.clone(), base, root_hist, positions, frames })
    }

    pub fn video(&self) -> &IndexedVideo {
        &self.video
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Segment-center anchor frames before displacement.
    pub fn base_anchors(&self) -> &[i64] {
        &self.base
    }

    fn check(&self, model: &StaogModel) -> Result<()> {
        if model.structure() != &self.structure {
            return Err(Error::argument(format!("video {} was prepared for a different structure", self.video.id)));
        }
        if model.vocab_size() != self.video.vocab_size() {
            return Err(Error::format(format!(
                "video {} indexed with {} words, model uses {}",
                self.video.id,
                self.video.vocab_size(),
                model.vocab_size()
            )));
        }
        Ok(())
    }
}

/// One candidate configuration of a single and-node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameHypothesis {
    pub t: usize,
    pub delta: i32,
    /// Position of `delta` in [`Structure::displacements`].
    pub delta_index: usize,
    pub frame: i64,
    /// Active leaf and position per or-node of this and-node.
    pub parts: Vec<PartChoice>,
    /// And-node response: frame appearance plus the active leaves.
    pub and_score: f64,
    /// Spatial edge responses among this frame's active leaves.
    pub spatial_score: f64,
}

impl FrameHypothesis {
    pub fn score(&self) -> f64 {
        self.and_score + self.spatial_score
    }

    fn key(&self) -> (usize, Vec<LeafId>) {
        (self.delta_index, self.parts.iter().map(|p| p.leaf).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub score: f64,
    pub assignment: LatentAssignment,
    pub hypotheses: Vec<FrameHypothesis>,
}

/// Best position of `leaf` around anchor `frame`, computed from the raw
/// video.
pub fn detect_part(model: &StaogModel, video: &IndexedVideo, frame: i64, leaf: LeafId) -> Result<(PartChoice, f64)> {
    let or_node = model.parent_of(leaf).ok_or_else(|| Error::argument(format!("unknown leaf {leaf}")))?;
    let cell = model.cell_of(or_node);
    let s = model.structure();
    let positions = candidate_positions(s, cell, video.width, video.height);
    let hists: Vec<SparseVec> = positions.iter().map(|&p| video.region_histogram(&s.part_region(frame, p))).collect();
    let q = s.cell_center(cell, video.width, video.height);
    Ok(best_position(model, leaf, &positions, &hists, q))
}

fn best_position(
    model: &StaogModel,
    leaf: LeafId,
    positions: &[(f64, f64)],
    hists: &[SparseVec],
    q: (f64, f64),
) -> (PartChoice, f64) {
    let appearance = model.leaf_appearance(leaf);
    let deformation = model.leaf_deformation(leaf);
    let mut best = (0, f64::NEG_INFINITY);
    for (n, (&p, h)) in positions.iter().zip(hists).enumerate() {
        let r = leaf_score(appearance, deformation, h, p, q);
        if r > best.1 + TIE_EPS {
            best = (n, r);
        }
    }
    let p = positions[best.0];
    (PartChoice { leaf, x: p.0, y: p.1 }, best.1)
}

/// Detection result of every child of every or-node of one and-node.
fn detect_frame(model: &StaogModel, pv: &PreparedVideo, t: usize, frame: i64) -> Vec<Vec<(PartChoice, f64)>> {
    let cache = &pv.frames[&frame];
    let k = model.structure().cells();
    (0..k)
        .map(|cell| {
            let q = model.structure().cell_center(cell, pv.video.width, pv.video.height);
            model
                .children(t * k + cell)
                .iter()
                .map(|&leaf| best_position(model, leaf, &pv.positions[cell], &cache.part_hists[cell], q))
                .collect()
        })
        .collect()
}

fn spatial_within(model: &StaogModel, t: usize, parts: &[PartChoice], width: u32, height: u32) -> f64 {
    let k = model.structure().cells();
    model
        .structure()
        .spatial_edges()
        .into_iter()
        .filter(|&(i, _)| i / k == t)
        .map(|(i, j)| {
            let (pa, pb) = (parts[i - t * k], parts[j - t * k]);
            let f = model.spatial_feature(i, pa.position(), j, pb.position(), width, height);
            model.spatial_params(pa.leaf, pb.leaf).map_or(0.0, |beta| edge_response(beta, &f))
        })
        .sum()
}

/// Calls `visit` with every index combination of a mixed-radix counter, the
/// first digit most significant.
fn for_each_combination(radices: &[usize], mut visit: impl FnMut(&[usize])) {
    if radices.contains(&0) {
        return;
    }
    let mut digits = vec![0; radices.len()];
    loop {
        visit(&digits);
        let mut pos = radices.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < radices[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Hypotheses of and-node `t` at displacement index `delta_index`, best
/// first, at most `cap` of them. Empty when the displaced anchor is out of
/// range.
pub fn enumerate_frame_hypotheses(
    model: &StaogModel,
    pv: &PreparedVideo,
    t: usize,
    delta_index: usize,
    cap: usize,
) -> Result<Vec<FrameHypothesis>> {
    pv.check(model)?;
    let s = model.structure();
    let deltas = s.displacements();
    if t >= s.segments || delta_index >= deltas.len() {
        return Err(Error::argument(format!("no and-node {t} / displacement index {delta_index}")));
    }
    let delta = deltas[delta_index];
    let frame = pv.base[t] + delta as i64;
    let Some(cache) = pv.frames.get(&frame) else {
        return Ok(Vec::new());
    };
    let detections = detect_frame(model, pv, t, frame);
    let frame_term = cache.and_hist.dot_dense(model.and_appearance(t));
    let radices: Vec<usize> = detections.iter().map(Vec::len).collect();
    let (w, h) = (pv.video.width, pv.video.height);
    let mut out = Vec::new();
    for_each_combination(&radices, |digits| {
        let parts: Vec<PartChoice> = digits.iter().enumerate().map(|(c, &d)| detections[c][d].0).collect();
        let and_score = frame_term + digits.iter().enumerate().map(|(c, &d)| detections[c][d].1).sum::<f64>();
        let spatial_score = spatial_within(model, t, &parts, w, h);
        out.push(FrameHypothesis { t, delta, delta_index, frame, parts, and_score, spatial_score });
    });
    // stable: exact ties keep lexicographic leaf order
    out.sort_by(|a, b| b.score().total_cmp(&a.score()));
    out.truncate(cap);
    Ok(out)
}

fn temporal_link(model: &StaogModel, a: &FrameHypothesis, b: &FrameHypothesis) -> f64 {
    let f = model.temporal_feature(a.frame, b.frame);
    a.parts
        .iter()
        .zip(&b.parts)
        .map(|(pa, pb)| model.temporal_params(pa.leaf, pb.leaf).map_or(0.0, |beta| edge_response(beta, &f)))
        .sum()
}

type PathKey = Vec<(usize, Vec<LeafId>)>;

fn better(score: f64, key: &PathKey, best: &Option<(f64, PathKey, Vec<usize>)>) -> bool {
    match best {
        None => true,
        Some((s, k, _)) => score > s + TIE_EPS || ((score - s).abs() <= TIE_EPS && key < k),
    }
}

/// Maximizes the model response over one hypothesis per anchor frame with
/// strictly increasing anchors; hypothesis lists are capped at `H`.
pub fn infer(model: &StaogModel, pv: &PreparedVideo) -> Result<InferenceResult> {
    infer_capped(model, pv, model.structure().max_hypotheses)
}

/// As [`infer`] with an explicit per-(frame, displacement) cap.
pub fn infer_capped(model: &StaogModel, pv: &PreparedVideo, cap: usize) -> Result<InferenceResult> {
    pv.check(model)?;
    let s = model.structure();
    let n_deltas = s.displacements().len();
    let mut lists: Vec<Vec<FrameHypothesis>> = Vec::with_capacity(s.segments);
    for t in 0..s.segments {
        let mut all = Vec::new();
        for di in 0..n_deltas {
            all.extend(enumerate_frame_hypotheses(model, pv, t, di, cap)?);
        }
        lists.push(all);
    }

    // best[h] = (score, path key, path indices) of the best chain ending at h
    let mut prev: Vec<Option<(f64, PathKey, Vec<usize>)>> = lists[0]
        .iter()
        .enumerate()
        .map(|(n, h)| Some((h.score() + model.temporal_penalty(0, h.delta), vec![h.key()], vec![n])))
        .collect();
    for t in 1..s.segments {
        let mut cur = Vec::with_capacity(lists[t].len());
        for h in &lists[t] {
            let node = h.score() + model.temporal_penalty(t, h.delta);
            let key = h.key();
            let mut best: Option<(f64, PathKey, Vec<usize>)> = None;
            for (n, state) in prev.iter().enumerate() {
                let Some((score, path_key, path)) = state else { continue };
                let g = &lists[t - 1][n];
                if g.frame >= h.frame {
                    continue;
                }
                let total = score + temporal_link(model, g, h) + node;
                let mut full = path_key.clone();
                full.push(key.clone());
                if better(total, &full, &best) {
                    let mut idx = path.clone();
                    idx.push(cur.len());
                    best = Some((total, full, idx));
                }
            }
            cur.push(best);
        }
        prev = cur;
    }
    let mut best: Option<(f64, PathKey, Vec<usize>)> = None;
    for state in prev.into_iter().flatten() {
        if better(state.0, &state.1, &best) {
            best = Some(state);
        }
    }
    let (chain, _, path) =
        best.ok_or_else(|| Error::Inference(format!("video {}: no valid anchor placement", pv.video.id)))?;
    let constant = pv.root_hist.dot_dense(model.root_weights()) + model.bias();
    let hypotheses: Vec<FrameHypothesis> = path.iter().enumerate().map(|(t, &n)| lists[t][n].clone()).collect();
    let assignment = LatentAssignment {
        displacements: hypotheses.iter().map(|h| h.delta).collect(),
        parts: hypotheses.iter().flat_map(|h| h.parts.iter().copied()).collect(),
    };
    Ok(InferenceResult { score: constant + chain, assignment, hypotheses })
}

/// Scores every valid (displacement, leaf choice) combination with
/// [`StaogModel::global_response`] and returns the best. Refuses when the
/// enumeration exceeds [`BRUTEFORCE_LIMIT`].
pub fn infer_bruteforce(model: &StaogModel, video: &IndexedVideo) -> Result<InferenceResult> {
    let s = model.structure();
    let k = s.cells();
    let deltas = s.displacements();
    let base = initial_anchors(video.num_frames, s.segments)?;
    let mut total: u64 = 1;
    for t in 0..s.segments {
        let leaves: u64 = (0..k).map(|c| model.children(t * k + c).len() as u64).product();
        total = total.saturating_mul(deltas.len() as u64 * leaves);
    }
    if total > BRUTEFORCE_LIMIT {
        return Err(Error::argument(format!("{total} configurations exceed the brute-force limit {BRUTEFORCE_LIMIT}")));
    }

    // per-frame options in key order: displacement index, then leaf digits
    let mut detections: BTreeMap<(i64, LeafId), PartChoice> = BTreeMap::new();
    let mut options: Vec<Vec<(usize, Vec<PartChoice>)>> = Vec::new();
    for t in 0..s.segments {
        let mut opts = Vec::new();
        for (di, &d) in deltas.iter().enumerate() {
            let frame = base[t] + d as i64;
            let radices: Vec<usize> = (0..k).map(|c| model.children(t * k + c).len()).collect();
            let mut combos = Vec::new();
            for_each_combination(&radices, |digits| combos.push(digits.to_vec()));
            for digits in combos {
                let mut parts = Vec::with_capacity(k);
                for (c, &dg) in digits.iter().enumerate() {
                    let leaf = model.children(t * k + c)[dg];
                    let choice = match detections.get(&(frame, leaf)) {
                        Some(p) => *p,
                        None => {
                            let (p, _) = detect_part(model, video, frame, leaf)?;
                            detections.insert((frame, leaf), p);
                            p
                        }
                    };
                    parts.push(choice);
                }
                opts.push((di, parts));
            }
        }
        options.push(opts);
    }

    let (lo, hi) = s.anchor_range(video.num_frames);
    let radices: Vec<usize> = options.iter().map(Vec::len).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut failure: Option<Error> = None;
    for_each_combination(&radices, |digits| {
        if failure.is_some() {
            return;
        }
        let mut prev = i64::MIN;
        for (t, &dg) in digits.iter().enumerate() {
            let f = base[t] + deltas[options[t][dg].0] as i64;
            if f < lo || f >= hi || f <= prev {
                return;
            }
            prev = f;
        }
        let a = LatentAssignment {
            displacements: digits.iter().enumerate().map(|(t, &dg)| deltas[options[t][dg].0]).collect(),
            parts: digits.iter().enumerate().flat_map(|(t, &dg)| options[t][dg].1.iter().copied()).collect(),
        };
        match model.global_response(video, &a) {
            Ok(score) => {
                // enumeration runs in key order, so only a strictly better
                // score replaces the incumbent
                if best.as_ref().is_none_or(|(b, _)| score > b + TIE_EPS) {
                    best = Some((score, digits.to_vec()));
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (score, digits) =
        best.ok_or_else(|| Error::Inference(format!("video {}: no valid anchor placement", video.id)))?;
    let mut hypotheses = Vec::new();
    for (t, &dg) in digits.iter().enumerate() {
        let (di, parts) = &options[t][dg];
        let delta = deltas[*di];
        let frame = base[t] + delta as i64;
        let and_score = model.and_response(video, t, frame, parts)?;
        let spatial_score = spatial_within(model, t, parts, video.width, video.height);
        hypotheses.push(FrameHypothesis { t, delta, delta_index: *di, frame, parts: parts.clone(), and_score, spatial_score });
    }
    let assignment = LatentAssignment {
        displacements: hypotheses.iter().map(|h| h.delta).collect(),
        parts: hypotheses.iter().flat_map(|h| h.parts.iter().copied()).collect(),
    };
    Ok(InferenceResult { score, assignment, hypotheses })
}
