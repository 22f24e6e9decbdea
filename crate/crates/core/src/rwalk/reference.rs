//! Quadratic reference implementation of the merge phase.
//!
//! Uses association lists and linear scans only, and resolves shared nodes by
//! a pairwise fixpoint instead of an argmax, so it shares no data structures
//! or control flow with [`super::merge_phase`]. Intended as a test oracle for
//! small inputs.

use super::{Cluster, Clustering, Walk};
use crate::graph::NodeId;

type Assoc = Vec<(NodeId, u64)>;

fn lookup(list: &Assoc, node: NodeId) -> Option<u64> {
    list.iter().find(|&&(v, _)| v == node).map(|&(_, c)| c)
}

fn peak(list: &Assoc) -> u64 {
    list.iter().fold(0, |m, &(_, c)| m.max(c))
}

/// True if walk `a` must be processed before walk `b`.
fn precedes(walks: &[Walk], a: usize, b: usize) -> bool {
    let (wa, wb) = (&walks[a], &walks[b]);
    if wa.length != wb.length {
        return wa.length > wb.length;
    }
    let (ta, tb) = (wa.total_visits(), wb.total_visits());
    if ta != tb {
        return ta > tb;
    }
    a < b
}

pub fn reference_merge(walks: &[Walk], t_cm: f64, node_count: usize) -> Clustering {
    // Selection of the next walk by repeated linear scan.
    let mut pending: Vec<usize> = (0..walks.len()).collect();
    let mut clusters: Vec<Assoc> = Vec::new();

    while !pending.is_empty() {
        let mut best = 0;
        for i in 1..pending.len() {
            if precedes(walks, pending[i], pending[best]) {
                best = i;
            }
        }
        let walk = &walks[pending.remove(best)];
        let mut current: Assoc = walk.visits.iter().map(|&(v, c)| (v, c as u64)).collect();
        if current.is_empty() {
            continue;
        }
        let walk_peak = peak(&current);

        let mut merged = false;
        'clusters: for cluster in clusters.iter_mut() {
            let cluster_peak = peak(cluster);
            for &(u, cw) in &current {
                if let Some(cc) = lookup(cluster, u) {
                    let nw = cw as f64 / walk_peak as f64;
                    let nc = cc as f64 / cluster_peak as f64;
                    if nw >= 1.0 - t_cm && nc >= 1.0 - t_cm && (nw - nc).abs() < t_cm {
                        for &(v, c) in &current {
                            match cluster.iter_mut().find(|(x, _)| *x == v) {
                                Some(slot) => slot.1 += c,
                                None => cluster.push((v, c)),
                            }
                        }
                        merged = true;
                        break 'clusters;
                    }
                }
            }
        }
        if merged {
            continue;
        }

        // Cut one dominated node at a time until none is left.
        loop {
            let mut victim = None;
            'scan: for (pos, &(u, cw)) in current.iter().enumerate() {
                let nw = cw as f64 / walk_peak as f64;
                for cluster in &clusters {
                    if let Some(cc) = lookup(cluster, u) {
                        let nc = cc as f64 / peak(cluster) as f64;
                        if nc - nw >= t_cm {
                            victim = Some(pos);
                            break 'scan;
                        }
                    }
                }
            }
            match victim {
                Some(pos) => {
                    current.remove(pos);
                }
                None => break,
            }
        }
        if !current.is_empty() {
            clusters.push(current);
        }
    }

    // Pairwise elimination until every node sits in one cluster.
    loop {
        let mut changed = false;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let shared: Vec<NodeId> = clusters[a]
                    .iter()
                    .filter(|&&(v, _)| lookup(&clusters[b], v).is_some())
                    .map(|&(v, _)| v)
                    .collect();
                for v in shared {
                    let ca = lookup(&clusters[a], v).unwrap();
                    let cb = lookup(&clusters[b], v).unwrap();
                    let loser = if ca >= cb { b } else { a };
                    clusters[loser].retain(|&(x, _)| x != v);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let kept: Vec<Cluster> = clusters
        .into_iter()
        .filter(|c| !c.is_empty())
        .map(Cluster::from_members)
        .collect();
    let unassigned = (0..node_count as NodeId)
        .filter(|&v| !kept.iter().any(|c| c.members.iter().any(|&(x, _)| x == v)))
        .collect();
    Clustering {
        clusters: kept,
        unassigned,
    }
}
