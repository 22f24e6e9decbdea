//! Random-walk clustering.
//!
//! The walk phase launches `K = ceil(k * N)` walks from distinct random start
//! nodes. Each walk follows a uniformly chosen out-link per step and stops at
//! a node without out-links or after `L = ceil(max_walk_factor * N)` steps,
//! recording how often it visited every node. The merge phase folds those
//! visit-count sets into disjoint clusters around shared pivot nodes, see
//! [`merge_phase`].

mod merge;
mod reference;

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LinkGraph, NodeId};
use crate::rng::{stream_rng, StreamRng};

pub use merge::merge_phase;
pub use reference::reference_merge;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Approximation coefficient in (0, 1]: fraction of nodes used as starts.
    pub k: f64,
    /// Walk length cap as a multiple of the node count.
    pub max_walk_factor: f64,
    /// Normalized cut/merge threshold in (0, 1].
    pub t_cm: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            k: 0.5,
            max_walk_factor: 1.0,
            t_cm: 0.25,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k <= 1.0) {
            return Err(Error::Argument(format!(
                "k must be in (0, 1], got {}",
                self.k
            )));
        }
        if !(self.max_walk_factor > 0.0 && self.max_walk_factor.is_finite()) {
            return Err(Error::Argument(format!(
                "max_walk_factor must be > 0, got {}",
                self.max_walk_factor
            )));
        }
        if !(self.t_cm > 0.0 && self.t_cm <= 1.0) {
            return Err(Error::Argument(format!(
                "t_cm must be in (0, 1], got {}",
                self.t_cm
            )));
        }
        Ok(())
    }

    /// `K = ceil(k * N)`, clamped to `1..=N` for non-empty graphs.
    pub fn walk_count(&self, nodes: usize) -> usize {
        if nodes == 0 {
            return 0;
        }
        // Absorb representation error so that e.g. 0.3 * 10 yields 3.
        let raw = self.k * nodes as f64;
        let k = (raw - raw.abs() * 1e-12).ceil() as usize;
        k.clamp(1, nodes)
    }

    /// `L = ceil(max_walk_factor * N)`, at least 1.
    pub fn max_walk_len(&self, nodes: usize) -> usize {
        let raw = self.max_walk_factor * nodes as f64;
        ((raw - raw.abs() * 1e-12).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Reached a node without out-links.
    StoppingState,
    LengthCap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub start: NodeId,
    /// Visit count per node, sorted by node id. Counts sum to `length + 1`.
    pub visits: Vec<(NodeId, u32)>,
    pub length: usize,
    pub terminated: Termination,
}

impl Walk {
    /// Builds a walk record from explicit counts; used for merge inputs that
    /// did not come from [`random_walk`].
    pub fn from_visits(visits: impl IntoIterator<Item = (NodeId, u32)>) -> Self {
        let mut acc: HashMap<NodeId, u32> = HashMap::new();
        for (v, c) in visits {
            *acc.entry(v).or_insert(0) += c;
        }
        let mut visits: Vec<(NodeId, u32)> = acc.into_iter().filter(|&(_, c)| c > 0).collect();
        visits.sort_unstable();
        let total: u64 = visits.iter().map(|&(_, c)| c as u64).sum();
        let start = visits
            .iter()
            .max_by_key(|&&(v, c)| (c, std::cmp::Reverse(v)))
            .map(|&(v, _)| v)
            .unwrap_or(0);
        Walk {
            start,
            visits,
            length: total.saturating_sub(1) as usize,
            terminated: Termination::StoppingState,
        }
    }

    pub fn count(&self, node: NodeId) -> u32 {
        self.visits
            .binary_search_by_key(&node, |&(v, _)| v)
            .map(|i| self.visits[i].1)
            .unwrap_or(0)
    }

    pub fn total_visits(&self) -> u64 {
        self.visits.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn max_visits(&self) -> u32 {
        self.visits.iter().map(|&(_, c)| c).max().unwrap_or(0)
    }
}

/// Uniformly random successor of `v`, or `None` at a stopping state.
pub fn step<R: Rng + ?Sized>(g: &LinkGraph, v: NodeId, rng: &mut R) -> Option<NodeId> {
    let succ = g.successors(v);
    match succ.len() {
        0 => None,
        1 => Some(succ[0]),
        n => Some(succ[rng.random_range(0..n)]),
    }
}

/// Walks from `start` until a stopping state or `max_len` steps.
pub fn random_walk<R: Rng + ?Sized>(
    g: &LinkGraph,
    start: NodeId,
    max_len: usize,
    rng: &mut R,
) -> Walk {
    let mut visits: HashMap<NodeId, u32> = HashMap::new();
    visits.insert(start, 1);
    let mut current = start;
    let mut length = 0;
    let terminated = loop {
        if g.out_degree(current) == 0 {
            break Termination::StoppingState;
        }
        if length >= max_len {
            break Termination::LengthCap;
        }
        current = step(g, current, rng).expect("node has out-links");
        length += 1;
        *visits.entry(current).or_insert(0) += 1;
    };
    let mut visits: Vec<(NodeId, u32)> = visits.into_iter().collect();
    visits.sort_unstable();
    Walk {
        start,
        visits,
        length,
        terminated,
    }
}

/// Start nodes for the walk phase: a seeded shuffle prefix of length `K`.
pub fn start_nodes(node_count: usize, cfg: &WalkConfig) -> Vec<NodeId> {
    use rand::seq::SliceRandom;
    let k = cfg.walk_count(node_count);
    let mut nodes: Vec<NodeId> = (0..node_count as NodeId).collect();
    let (chosen, _) = nodes.partial_shuffle(&mut stream_rng(cfg.seed, 0), k);
    chosen.to_vec()
}

fn walk_rng(seed: u64, walk_index: usize) -> StreamRng {
    stream_rng(seed, walk_index as u64 + 1)
}

/// Runs the `K` walks in parallel; walk `i` draws from its own stream, so the
/// result does not depend on the thread count.
pub fn walk_phase(g: &LinkGraph, cfg: &WalkConfig) -> Result<Vec<Walk>> {
    cfg.validate()?;
    if g.is_empty() {
        return Err(Error::Argument("cannot walk an empty graph".into()));
    }
    let max_len = cfg.max_walk_len(g.node_count());
    let starts = start_nodes(g.node_count(), cfg);
    Ok(starts
        .par_iter()
        .enumerate()
        .map(|(i, &s)| random_walk(g, s, max_len, &mut walk_rng(cfg.seed, i)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Members with their accumulated raw visit counts, sorted by node id.
    pub members: Vec<(NodeId, u64)>,
    /// Member with the largest visit count (smallest id on ties).
    pub pivot: NodeId,
}

impl Cluster {
    /// Pivot is the member with the highest count, smallest id on ties.
    pub fn from_members(mut members: Vec<(NodeId, u64)>) -> Self {
        members.sort_unstable();
        let pivot = members
            .iter()
            .max_by_key(|&&(v, c)| (c, std::cmp::Reverse(v)))
            .map(|&(v, _)| v)
            .expect("clusters are non-empty");
        Cluster { members, pivot }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.members.iter().map(|&(v, _)| v)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.members
            .binary_search_by_key(&node, |&(v, _)| v)
            .is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    /// Nodes in no cluster, ascending.
    pub unassigned: Vec<NodeId>,
}

impl Clustering {
    /// Clustering from plain node groups; visit counts are set to 1 and pivots
    /// to the smallest member. Groups must be non-empty.
    pub fn from_groups(groups: Vec<Vec<NodeId>>, node_count: usize) -> Self {
        let clusters: Vec<Cluster> = groups
            .into_iter()
            .filter(|g| !g.is_empty())
            .map(|g| Cluster::from_members(g.into_iter().map(|v| (v, 1)).collect()))
            .collect();
        let mut clustering = Clustering {
            clusters,
            unassigned: Vec::new(),
        };
        clustering.fill_unassigned(node_count);
        clustering
    }

    pub(crate) fn fill_unassigned(&mut self, node_count: usize) {
        let mut seen = vec![false; node_count];
        for c in &self.clusters {
            for v in c.nodes() {
                if let Some(s) = seen.get_mut(v as usize) {
                    *s = true;
                }
            }
        }
        self.unassigned = (0..node_count as NodeId)
            .filter(|&v| !seen[v as usize])
            .collect();
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.clusters.iter().map(Cluster::len).max().unwrap_or(0)
    }

    /// Cluster node sets in a canonical order, for order-insensitive comparison.
    pub fn canonical_groups(&self) -> Vec<Vec<NodeId>> {
        let mut groups: Vec<Vec<NodeId>> =
            self.clusters.iter().map(|c| c.nodes().collect()).collect();
        groups.sort();
        groups
    }

    /// Checks disjointness, coverage of `0..node_count`, non-empty clusters
    /// and pivot membership. Returns the first violation found.
    pub fn check_invariants(&self, node_count: usize) -> std::result::Result<(), String> {
        let mut owner = vec![usize::MAX; node_count];
        for (i, c) in self.clusters.iter().enumerate() {
            if c.is_empty() {
                return Err(format!("cluster {i} is empty"));
            }
            if !c.contains(c.pivot) {
                return Err(format!("pivot {} of cluster {i} is not a member", c.pivot));
            }
            for v in c.nodes() {
                let slot = owner
                    .get_mut(v as usize)
                    .ok_or_else(|| format!("node {v} out of range"))?;
                if *slot != usize::MAX {
                    return Err(format!("node {v} in clusters {} and {i}", *slot));
                }
                *slot = i;
            }
        }
        for &v in &self.unassigned {
            let slot = owner
                .get_mut(v as usize)
                .ok_or_else(|| format!("unassigned node {v} out of range"))?;
            if *slot != usize::MAX {
                return Err(format!("node {v} both clustered and unassigned"));
            }
            *slot = usize::MAX - 1;
        }
        if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(format!("node {v} neither clustered nor unassigned"));
        }
        Ok(())
    }
}

/// Walk phase followed by merge phase.
pub fn cluster(g: &LinkGraph, cfg: &WalkConfig) -> Result<Clustering> {
    let walks = walk_phase(g, cfg)?;
    Ok(merge_phase(&walks, cfg.t_cm, g.node_count()))
}
