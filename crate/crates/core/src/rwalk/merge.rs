use std::cmp::Reverse;
use std::collections::HashMap;

use super::{Cluster, Clustering, Walk};
use crate::graph::NodeId;

struct Accumulator {
    counts: HashMap<NodeId, u64>,
    max: u64,
}

impl Accumulator {
    fn normalized(&self, node: NodeId) -> f64 {
        self.counts[&node] as f64 / self.max as f64
    }
}

/// Processing order: longest walks first, then most visits, then input order.
pub(super) fn walk_order(walks: &[Walk]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..walks.len()).collect();
    order.sort_by_key(|&i| {
        (
            Reverse(walks[i].length),
            Reverse(walks[i].total_visits()),
            i,
        )
    });
    order
}

/// Folds walk visit counts into disjoint clusters.
///
/// Every visit count is normalized by its walk's (or cluster's) maximum. Walks
/// are taken longest first and compared with the clusters accepted so far:
///
/// * **merge**: if some shared node has normalized count `>= 1 - t_cm` on
///   both sides and the two values differ by less than `t_cm`, the walk is
///   absorbed into the lowest-indexed such cluster (counts summed).
/// * **cut**: otherwise every shared node whose cluster-side normalized
///   count exceeds the walk-side one by at least `t_cm` is dropped from the
///   walk, and whatever remains becomes a new cluster.
///
/// A node still present in several clusters afterwards stays only where its
/// raw count is largest (lowest cluster index on ties). Clusters emptied by
/// that step are removed. Nodes of `0..node_count` outside every cluster are
/// reported as unassigned.
pub fn merge_phase(walks: &[Walk], t_cm: f64, node_count: usize) -> Clustering {
    let mut clusters: Vec<Accumulator> = Vec::new();
    // Clusters containing each node, ascending.
    let mut owners: HashMap<NodeId, Vec<usize>> = HashMap::new();

    for wi in walk_order(walks) {
        let walk = &walks[wi];
        if walk.visits.is_empty() {
            continue;
        }
        let walk_max = walk.max_visits() as f64;
        let nv_walk = |count: u32| count as f64 / walk_max;

        let mut target: Option<usize> = None;
        for &(u, count) in &walk.visits {
            let nw = nv_walk(count);
            if nw < 1.0 - t_cm {
                continue;
            }
            let Some(cs) = owners.get(&u) else { continue };
            for &c in cs {
                if target.is_some_and(|t| t <= c) {
                    break;
                }
                let nc = clusters[c].normalized(u);
                if nc >= 1.0 - t_cm && (nw - nc).abs() < t_cm {
                    target = Some(c);
                    break;
                }
            }
        }

        if let Some(c) = target {
            let acc = &mut clusters[c];
            for &(u, count) in &walk.visits {
                let entry = acc.counts.entry(u).or_insert_with(|| {
                    let cs = owners.entry(u).or_default();
                    if let Err(pos) = cs.binary_search(&c) {
                        cs.insert(pos, c);
                    }
                    0
                });
                *entry += count as u64;
                acc.max = acc.max.max(*entry);
            }
            continue;
        }

        let kept: Vec<(NodeId, u32)> = walk
            .visits
            .iter()
            .copied()
            .filter(|&(u, count)| {
                let nw = nv_walk(count);
                owners
                    .get(&u)
                    .is_none_or(|cs| !cs.iter().any(|&c| clusters[c].normalized(u) - nw >= t_cm))
            })
            .collect();
        if kept.is_empty() {
            continue;
        }
        let idx = clusters.len();
        let mut counts = HashMap::with_capacity(kept.len());
        let mut max = 0;
        for (u, count) in kept {
            counts.insert(u, count as u64);
            max = max.max(count as u64);
            owners.entry(u).or_default().push(idx);
        }
        clusters.push(Accumulator { counts, max });
    }

    // Resolve multi-membership by raw count.
    let mut members: Vec<Vec<(NodeId, u64)>> = vec![Vec::new(); clusters.len()];
    for (&u, cs) in &owners {
        let best = cs
            .iter()
            .copied()
            .max_by_key(|&c| (clusters[c].counts[&u], Reverse(c)))
            .expect("owner lists are non-empty");
        members[best].push((u, clusters[best].counts[&u]));
    }

    let mut clustering = Clustering {
        clusters: members
            .into_iter()
            .filter(|m| !m.is_empty())
            .map(Cluster::from_members)
            .collect(),
        unassigned: Vec::new(),
    };
    clustering.fill_unassigned(node_count);
    clustering
}
