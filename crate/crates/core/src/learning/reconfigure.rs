use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ImputedSample, TrainConfig};
use crate::error::Result;
use crate::inference::PreparedVideo;
use crate::model::{LeafId, StaogModel};
use crate::numerics::{spectral_cluster, sq_dist};

/// One structural change made by [`reconfigure`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "edit", rename_all = "snake_case")]
pub enum StructureEdit {
    Created { or_node: usize, leaf: LeafId, donor: LeafId, members: usize },
    Removed { or_node: usize, leaf: LeafId, members: usize },
}

#[derive(Debug, Clone)]
pub struct Reconfiguration {
    pub model: StaogModel,
    /// Positives with leaf choices moved to the new structure and their
    /// features rebuilt under it.
    pub imputed: Vec<ImputedSample>,
    pub edits: Vec<StructureEdit>,
}

impl Reconfiguration {
    pub fn changed(&self) -> bool {
        !self.edits.is_empty()
    }
}

/// Proposes a new leaf structure from the appearance of the imputed parts.
///
/// For every or-node the appearance sub-vectors of its positives are
/// clustered spectrally (at most `m` clusters). Clusters are matched to
/// existing leaves greedily by member overlap. The largest unmatched
/// cluster with at least `min_cluster_size` members becomes a new leaf
/// (zero appearance, deformation copied from the leaf most of its members
/// came from) and its members switch to it. A leaf left with fewer than
/// `min_cluster_size` members is removed, smallest first, and its members
/// move to the leaf whose member centroid is nearest. Budgets cap both
/// edits per or-node. Features are rebuilt at unchanged part positions, so
/// samples that keep their leaf keep their score.
pub fn reconfigure(
    model: &StaogModel,
    videos: &[PreparedVideo],
    imputed: &[ImputedSample],
    config: &TrainConfig,
    seed: u64,
) -> Result<Reconfiguration> {
    let mut candidate = model.clone();
    let mut assignments: Vec<_> = imputed.iter().map(|s| s.assignment.clone()).collect();
    let mut edits = Vec::new();
    if imputed.is_empty() {
        return Ok(Reconfiguration { model: candidate, imputed: imputed.to_vec(), edits });
    }
    let m = model.structure().m;

    for or_node in 0..model.num_or_nodes() {
        let pis: Vec<Vec<f64>> = imputed.iter().map(|s| s.appearance(model, or_node)).collect();
        let mut members: Vec<LeafId> = assignments.iter().map(|a| a.parts[or_node].leaf).collect();

        let mut created = 0;
        if config.create_budget > 0 {
            let clusters = spectral_cluster(&pis, m, seed.wrapping_add(or_node as u64))?;
            let unmatched = unmatched_clusters(candidate.children(or_node), &members, &clusters.assignment, clusters.n_clusters());
            let sizes = clusters.cluster_sizes();
            let mut order: Vec<usize> = unmatched.into_iter().filter(|&c| sizes[c] >= config.min_cluster_size).collect();
            order.sort_by(|a, b| sizes[*b].cmp(&sizes[*a]).then(a.cmp(b)));
            for cluster in order {
                if created >= config.create_budget || candidate.children(or_node).len() >= m {
                    break;
                }
                let mut origin: BTreeMap<LeafId, usize> = BTreeMap::new();
                for (n, &c) in clusters.assignment.iter().enumerate() {
                    if c == cluster {
                        *origin.entry(members[n]).or_default() += 1;
                    }
                }
                let donor = origin.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(l, _)| *l).expect("cluster is non-empty");
                let leaf = candidate.add_leaf(or_node, Some(donor))?;
                for (n, &c) in clusters.assignment.iter().enumerate() {
                    if c == cluster {
                        members[n] = leaf;
                    }
                }
                edits.push(StructureEdit::Created { or_node, leaf, donor, members: sizes[cluster] });
                created += 1;
            }
        }

        let mut removed = 0;
        while removed < config.remove_budget && candidate.children(or_node).len() > 1 {
            let counts: Vec<(usize, LeafId)> = candidate
                .children(or_node)
                .iter()
                .map(|&l| (members.iter().filter(|&&x| x == l).count(), l))
                .collect();
            let Some(&(count, leaf)) = counts.iter().filter(|(n, _)| *n < config.min_cluster_size).min() else {
                break;
            };
            candidate.remove_leaf(leaf)?;
            let remaining = candidate.children(or_node).to_vec();
            let centroids: Vec<Option<Vec<f64>>> = remaining.iter().map(|&l| centroid(&pis, &members, l)).collect();
            for n in 0..members.len() {
                if members[n] != leaf {
                    continue;
                }
                let mut best = (remaining[0], f64::INFINITY);
                for (&l, c) in remaining.iter().zip(&centroids) {
                    if let Some(c) = c {
                        let d = sq_dist(&pis[n], c);
                        if d < best.1 {
                            best = (l, d);
                        }
                    }
                }
                members[n] = best.0;
            }
            edits.push(StructureEdit::Removed { or_node, leaf, members: count });
            removed += 1;
        }

        for (a, &leaf) in assignments.iter_mut().zip(&members) {
            a.parts[or_node].leaf = leaf;
        }
    }

    let mut rebuilt = Vec::with_capacity(imputed.len());
    for (s, a) in imputed.iter().zip(assignments) {
        let feature = candidate.joint_feature(videos[s.index].video(), &a)?;
        let score = feature.dot_dense(candidate.psi());
        rebuilt.push(ImputedSample { index: s.index, assignment: a, feature, score });
    }
    Ok(Reconfiguration { model: candidate, imputed: rebuilt, edits })
}

/// Clusters that no leaf claims when leaves pick clusters greedily by the
/// number of shared members (largest overlap first, lower ids on ties).
fn unmatched_clusters(leaves: &[LeafId], members: &[LeafId], assignment: &[usize], k: usize) -> Vec<usize> {
    let mut overlap: Vec<(usize, usize, usize)> = Vec::new();
    for (li, &leaf) in leaves.iter().enumerate() {
        for c in 0..k {
            let n = members.iter().zip(assignment).filter(|(l, a)| **l == leaf && **a == c).count();
            if n > 0 {
                overlap.push((n, li, c));
            }
        }
    }
    overlap.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut leaf_taken = vec![false; leaves.len()];
    let mut cluster_taken = vec![false; k];
    for (_, li, c) in overlap {
        if !leaf_taken[li] && !cluster_taken[c] {
            leaf_taken[li] = true;
            cluster_taken[c] = true;
        }
    }
    (0..k).filter(|&c| !cluster_taken[c]).collect()
}

fn centroid(pis: &[Vec<f64>], members: &[LeafId], leaf: LeafId) -> Option<Vec<f64>> {
    let rows: Vec<&Vec<f64>> = pis.iter().zip(members).filter(|(_, l)| **l == leaf).map(|(p, _)| p).collect();
    let first = rows.first()?;
    let mut c = vec![0.0; first.len()];
    for r in &rows {
        c.iter_mut().zip(r.iter()).for_each(|(s, x)| *s += x);
    }
    c.iter_mut().for_each(|x| *x /= rows.len() as f64);
    Some(c)
}
