//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance -- --nocapture`

mod common;

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use staog::commands::cmd_train;
use staog::features::{build_codebook, synth_dataset, write_feature_file, Codebook, SynthSpec};
use staog::learning::{predict, train, train_multiclass, ClassModel, StructureEdit, TrainConfig};
use staog::model::relations::{spatial_relation_feature, temporal_predicate_feature, AFTER, INTERRUPT, INTERSECT, MEETS};
use staog::numerics::{qp_solve, Constraint};
use staog::sparse::SparseVec;
use staog::{infer, infer_bruteforce, FeatureVideo, IndexedVideo, PreparedVideo, Structure};

const SCORE_TOL: f64 = 1e-9;
const ENERGY_TOL: f64 = 1e-9;
const QP_TOL: f64 = 1e-6;
const ORACLE_INSTANCES: usize = 150;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const FEATURE_TRIPLES: usize = 1200;
const MAX_CCCP_ITERS: usize = 15;
const CCCP_BUDGET: Duration = Duration::from_secs(300);
const MIN_HELD_OUT_ACCURACY: f64 = 0.90;
const CREATION_WINDOW: usize = 5;
const MAX_LEAVES: usize = 4;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Writes straight to stdout so the lines show even when output is captured.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

fn report(name: &'static str, pass: bool, detail: String) -> Outcome {
    emit(&format!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" }));
    Outcome { name, pass, detail }
}

fn codebook_for(videos: &[FeatureVideo]) -> Arc<Codebook> {
    let d: Vec<Vec<f64>> = videos.iter().flat_map(|v| v.points.iter().map(|p| p.descriptor.clone())).collect();
    Arc::new(build_codebook(&d, 8, 0).unwrap())
}

fn prepare(structure: &Structure, codebook: &Codebook, videos: &[FeatureVideo]) -> Vec<PreparedVideo> {
    videos.iter().map(|v| PreparedVideo::new(structure, IndexedVideo::new(v, codebook).unwrap()).unwrap()).collect()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut worst: f64 = 0.0;
    for n in 0..ORACLE_INSTANCES {
        let mut rng = common::rng(1000 + n as u64);
        let cb = common::line_codebook(6);
        let structure = common::small_structure(&mut rng);
        let model = common::random_model(&mut rng, structure, cb.clone(), 2);
        let video = common::random_video(&mut rng, &cb, 80, 60, 30, 200);
        let fast = infer(&model, &PreparedVideo::new(model.structure(), video.clone()).unwrap()).unwrap();
        let exact = infer_bruteforce(&model, &video).unwrap();
        let diff = (fast.score - exact.score).abs();
        worst = worst.max(diff);
        if diff > SCORE_TOL || fast.assignment != exact.assignment {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    report(
        "oracle equivalence",
        mismatches == 0 && elapsed < ORACLE_BUDGET,
        format!("{ORACLE_INSTANCES} instances, {mismatches} mismatches, max |diff| {worst:.2e}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn feature_consistency() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut rng = common::rng(77);
    while count < FEATURE_TRIPLES {
        let cb = common::line_codebook(rng.random_range(2..10));
        let (structure, (w, h, frames)) = if count % 4 == 0 {
            (Structure::default(), (160, 120, 60))
        } else {
            (common::small_structure(&mut rng), (80, 60, 30))
        };
        let model = common::random_model(&mut rng, structure, cb.clone(), MAX_LEAVES);
        let video = common::random_video(&mut rng, &cb, w, h, frames, 250);
        for _ in 0..10 {
            let a = common::random_assignment(&mut rng, &model, &video);
            let phi = model.joint_feature(&video, &a).unwrap();
            let direct = model.global_response(&video, &a).unwrap();
            worst = worst.max((phi.dot_dense(model.psi()) - direct).abs());
            count += 1;
        }
    }
    report("feature/score consistency", worst <= SCORE_TOL, format!("{count} triples, max |psi.phi - S| {worst:.2e}"))
}

fn cccp_monotone(models: &[ClassModel], elapsed: Duration) -> Outcome {
    let mut pass = elapsed < CCCP_BUDGET;
    let mut parts = Vec::new();
    for m in models {
        let e = m.outcome.energies();
        let monotone = e.windows(2).all(|w| w[1] <= w[0] + ENERGY_TOL);
        let fast = m.outcome.converged && m.outcome.iterations() <= MAX_CCCP_ITERS;
        pass &= monotone && fast;
        parts.push(format!(
            "{}: {} iterations, converged {}, energy {:.6} -> {:.6}, monotone {monotone}",
            m.class,
            m.outcome.iterations(),
            m.outcome.converged,
            e[0],
            e[e.len() - 1]
        ));
    }
    report("CCCP energy monotonicity", pass, format!("{}; {:.1}s", parts.join("; "), elapsed.as_secs_f64()))
}

fn held_out(models: &[ClassModel], codebook: &Codebook) -> Outcome {
    let test = synth_dataset(&SynthSpec::order_swap(10), 2).unwrap();
    let ms: Vec<_> = models.iter().map(|m| m.outcome.model.clone()).collect();
    let correct = test
        .iter()
        .filter(|v| {
            let p = predict(&ms, &IndexedVideo::new(v, codebook).unwrap()).unwrap();
            Some(&models[p.best].class) == v.label.as_ref()
        })
        .count();
    let acc = correct as f64 / test.len() as f64;
    report("end-to-end separability", acc >= MIN_HELD_OUT_ACCURACY, format!("held-out accuracy {correct}/{} = {acc:.3}", test.len()))
}

fn relation_exactness() -> Outcome {
    let mut checked = 0usize;
    let mut bad = 0usize;
    let offsets: Vec<f64> = (-24..=24).map(|k| k as f64 * 5.0).collect();
    let rests = [(0.0, 0.0), (80.0, 0.0), (0.0, 60.0), (-80.0, 60.0), (40.0, -30.0)];
    for &ox in &offsets {
        for &oy in &offsets {
            for &(rx, ry) in &rests {
                for radius in [0.0, 50.0, 90.0] {
                    let f = spatial_relation_feature((10.0, 20.0), (10.0, 20.0), (10.0 + ox, 20.0 + oy), (10.0 + rx, 20.0 + ry), radius);
                    let groups = [f[0..4].iter().sum::<f64>(), f[4..6].iter().sum(), f[6..8].iter().sum()];
                    let l1: f64 = f.iter().map(|x| x.abs()).sum();
                    checked += 1;
                    if l1 != 3.0 || groups != [1.0, 1.0, 1.0] {
                        bad += 1;
                    }
                }
            }
        }
    }
    for span in 1u32..=20 {
        let half = span as f64 / 2.0;
        for fa in 0i64..40 {
            for fb in fa..fa + 3 * span as i64 + 5 {
                let a = (fa as f64 - half, fa as f64 + half);
                let b = (fb as f64 - half, fb as f64 + half);
                let f = temporal_predicate_feature(a, b, span);
                let gap = b.0 - a.1;
                let expected = if gap < 0.0 {
                    INTERSECT
                } else if gap == 0.0 {
                    MEETS
                } else if gap <= span as f64 {
                    AFTER
                } else {
                    INTERRUPT
                };
                checked += 1;
                if f.iter().sum::<f64>() != 1.0 || f[expected] != 1.0 {
                    bad += 1;
                }
            }
        }
    }
    report("relation feature exactness", bad == 0, format!("{checked} geometries, {bad} violations"))
}

fn structure_dynamics() -> Outcome {
    let videos = synth_dataset(&SynthSpec::two_modes(20), 3).unwrap();
    let cb = codebook_for(&videos);
    let structure = Structure::default();
    let pv = prepare(&structure, &cb, &videos);
    let positive: Vec<bool> = videos.iter().map(|v| v.label.as_deref() == Some("A")).collect();
    let outcome = train(&structure, cb, &pv, &positive, &TrainConfig::default()).unwrap();
    // the two-mode motif sits at anchor 1, cell (0, 0)
    let target = structure.cells();
    let created_at = outcome
        .log
        .iter()
        .find(|r| {
            r.structure_accepted
                && r.edits.iter().any(|e| matches!(e, StructureEdit::Created { or_node, .. } if *or_node == target))
        })
        .map(|r| r.iter);
    let max_leaves = outcome.log.iter().flat_map(|r| r.leaf_counts.iter().copied()).max().unwrap_or(0);
    let capped = max_leaves <= MAX_LEAVES && outcome.model.leaf_counts().iter().all(|&c| c <= MAX_LEAVES);
    let mut full = outcome.model.clone();
    while full.children(target).len() < MAX_LEAVES {
        full.add_leaf(target, None).unwrap();
    }
    let refuses = full.add_leaf(target, None).is_err();
    report(
        "structure dynamics",
        created_at.is_some_and(|i| i <= CREATION_WINDOW) && capped && refuses,
        format!(
            "leaf created at or-node {target} in iteration {created_at:?}, max leaves {max_leaves}, add beyond m refused {refuses}"
        ),
    )
}

/// Maximizes the two-multiplier dual `l.a - 1/2 a'Ga` over its feasible
/// polygon by checking the stationary point and the optimum on every edge.
fn two_constraint_closed_form(a1: &[f64; 3], a2: &[f64; 3], l: [f64; 2], c: f64, shared: bool) -> Vec<f64> {
    let dot = |x: &[f64; 3], y: &[f64; 3]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let g = [[dot(a1, a1), dot(a1, a2)], [dot(a2, a1), dot(a2, a2)]];
    let f = |x: [f64; 2]| {
        l[0] * x[0] + l[1] * x[1] - 0.5 * (g[0][0] * x[0] * x[0] + 2.0 * g[0][1] * x[0] * x[1] + g[1][1] * x[1] * x[1])
    };
    let feasible = |x: [f64; 2]| {
        x[0] >= -1e-15 && x[1] >= -1e-15 && if shared { x[0] + x[1] <= c + 1e-12 } else { x[0] <= c + 1e-12 && x[1] <= c + 1e-12 }
    };
    let mut candidates = Vec::new();
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if det.abs() > 1e-12 {
        candidates.push([(g[1][1] * l[0] - g[0][1] * l[1]) / det, (g[0][0] * l[1] - g[1][0] * l[0]) / det]);
    }
    // segments p + t d, t in [0, 1]
    let segments: Vec<([f64; 2], [f64; 2])> = if shared {
        vec![([0.0, 0.0], [c, 0.0]), ([0.0, 0.0], [0.0, c]), ([c, 0.0], [-c, c])]
    } else {
        vec![([0.0, 0.0], [c, 0.0]), ([0.0, 0.0], [0.0, c]), ([c, 0.0], [0.0, c]), ([0.0, c], [c, 0.0])]
    };
    for (p, d) in segments {
        let gd = [g[0][0] * d[0] + g[0][1] * d[1], g[1][0] * d[0] + g[1][1] * d[1]];
        let curv = d[0] * gd[0] + d[1] * gd[1];
        let gp = [g[0][0] * p[0] + g[0][1] * p[1], g[1][0] * p[0] + g[1][1] * p[1]];
        let slope = d[0] * (l[0] - gp[0]) + d[1] * (l[1] - gp[1]);
        let mut ts = vec![0.0, 1.0];
        if curv > 1e-15 {
            ts.push((slope / curv).clamp(0.0, 1.0));
        }
        for t in ts {
            candidates.push([p[0] + t * d[0], p[1] + t * d[1]]);
        }
    }
    let best = candidates
        .into_iter()
        .filter(|&x| feasible(x))
        .max_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap();
    (0..3).map(|k| best[0] * a1[k] + best[1] * a2[k]).collect()
}

fn qp_correctness() -> Outcome {
    let mut rng = common::rng(2024);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for _ in 0..300 {
        let a: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let loss = rng.random_range(0.0..3.0);
        let c = rng.random_range(0.01..5.0);
        let norm: f64 = a.iter().map(|x| x * x).sum();
        let alpha = (loss / norm).min(c);
        let s = qp_solve(vec![Constraint { coef: SparseVec::from_dense(&a), loss, group: 0 }], c, 3);
        for k in 0..3 {
            worst = worst.max((s.psi[k] - alpha * a[k]).abs());
        }
        n += 1;
    }
    for shared in [true, false] {
        for _ in 0..300 {
            let a1: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let a2: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let l = [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)];
            let c = rng.random_range(0.01..5.0);
            let cons = vec![
                Constraint { coef: SparseVec::from_dense(&a1), loss: l[0], group: 0 },
                Constraint { coef: SparseVec::from_dense(&a2), loss: l[1], group: usize::from(!shared) },
            ];
            let s = qp_solve(cons, c, 3);
            let expected = two_constraint_closed_form(&a1, &a2, l, c, shared);
            for k in 0..3 {
                worst = worst.max((s.psi[k] - expected[k]).abs());
            }
            n += 1;
        }
    }
    report("QP correctness", worst <= QP_TOL, format!("{n} problems, max |psi - closed form| {worst:.2e}"))
}

fn determinism() -> Outcome {
    let videos = synth_dataset(&SynthSpec::order_swap(20), 1).unwrap();
    let cb = codebook_for(&videos);
    let mut files = Vec::new();
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip([1, 4]) {
        let d = dir.path();
        write_feature_file(&d.join("train.jsonl"), &videos).unwrap();
        cb.save(&d.join("codebook.json")).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| cmd_train(&d.join("train.jsonl"), &d.join("codebook.json"), None, &d.join("models.json"), None))
            .unwrap();
        let read = |name: &str| std::fs::read(d.join(name)).unwrap();
        files.push([read("models.json"), read("models.A.json"), read("models.B.json")]);
    }
    let identical = files[0] == files[1];
    report(
        "determinism",
        identical,
        format!("two runs (1 and 4 threads): model files byte-identical {identical}, {} bytes", files[0][1].len()),
    )
}

#[test]
fn acceptance() {
    let mut results = vec![oracle_equivalence(), feature_consistency()];

    let train_videos = synth_dataset(&SynthSpec::order_swap(20), 1).unwrap();
    let cb = codebook_for(&train_videos);
    let structure = Structure::default();
    let start = Instant::now();
    let pv = prepare(&structure, &cb, &train_videos);
    let labels: Vec<String> = train_videos.iter().map(|v| v.label.clone().unwrap()).collect();
    let models = train_multiclass(&structure, cb.clone(), &pv, &labels, &TrainConfig::default()).unwrap();
    results.push(cccp_monotone(&models, start.elapsed()));
    results.push(held_out(&models, &cb));

    results.push(relation_exactness());
    results.push(structure_dynamics());
    results.push(qp_correctness());
    results.push(determinism());

    let failed: Vec<_> = results.iter().filter(|r| !r.pass).map(|r| format!("{}: {}", r.name, r.detail)).collect();
    emit(&format!("{}/{} criteria passed", results.len() - failed.len(), results.len()));
    assert!(failed.is_empty(), "failed criteria: {failed:#?}");
}

