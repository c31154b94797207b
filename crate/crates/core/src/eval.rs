//! Classification metrics.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Average precision of a ranking: the mean, over positives, of the
/// precision at each positive's rank. `ranked` is best first; returns 0
/// when there are no positives.
pub fn average_precision(ranked: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &is_pos) in ranked.iter().enumerate() {
        if is_pos {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        total / hits as f64
    }
}

/// AP of `scores` against binary `relevant`, ranking by descending score;
/// equal scores keep input order.
pub fn average_precision_of_scores(scores: &[f64], relevant: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let ranked: Vec<bool> = order.iter().map(|&n| relevant[n]).collect();
    average_precision(&ranked)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub class: String,
    pub support: usize,
    pub accuracy: f64,
    pub average_precision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub classes: Vec<ClassMetrics>,
    pub mean_accuracy: f64,
    pub mean_average_precision: f64,
    pub overall_accuracy: f64,
}

/// One scored video: ground truth, predicted class and per-class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub truth: String,
    pub predicted: String,
    pub scores: BTreeMap<String, f64>,
}

/// Per-class accuracy (recall of the class's own videos) and AP of the
/// class's score column, plus their means over classes with support.
pub fn evaluate(rows: &[Scored]) -> Result<Metrics> {
    if rows.is_empty() {
        return Err(Error::argument("nothing to evaluate"));
    }
    let classes: std::collections::BTreeSet<&String> =
        rows.iter().map(|r| &r.truth).chain(rows.iter().flat_map(|r| r.scores.keys())).collect();
    let mut out = Vec::new();
    for class in classes {
        let support = rows.iter().filter(|r| &r.truth == class).count();
        if support == 0 {
            continue;
        }
        let correct = rows.iter().filter(|r| &r.truth == class && &r.predicted == class).count();
        let scores: Vec<f64> = rows.iter().map(|r| r.scores.get(class).copied().unwrap_or(f64::NEG_INFINITY)).collect();
        let relevant: Vec<bool> = rows.iter().map(|r| &r.truth == class).collect();
        out.push(ClassMetrics {
            class: class.clone(),
            support,
            accuracy: correct as f64 / support as f64,
            average_precision: average_precision_of_scores(&scores, &relevant),
        });
    }
    let n = out.len() as f64;
    let overall = rows.iter().filter(|r| r.truth == r.predicted).count() as f64 / rows.len() as f64;
    Ok(Metrics {
        mean_accuracy: out.iter().map(|c| c.accuracy).sum::<f64>() / n,
        mean_average_precision: out.iter().map(|c| c.average_precision).sum::<f64>() / n,
        overall_accuracy: overall,
        classes: out,
    })
}
