//! Directed hyperlink graph and query-induced subgraphs.
//!
//! The graph is stored in compressed sparse row form: one offset array and one
//! flat successor array, plus a per-node in-degree tally. Successor lists are
//! sorted ascending and contain neither self-loops nor duplicates, so two graphs
//! built from the same edge set compare equal.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DegreeMode {
    #[default]
    In,
    Out,
    Total,
}

impl fmt::Display for DegreeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegreeMode::In => "in",
            DegreeMode::Out => "out",
            DegreeMode::Total => "total",
        })
    }
}

impl FromStr for DegreeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" => Ok(DegreeMode::In),
            "out" => Ok(DegreeMode::Out),
            "total" => Ok(DegreeMode::Total),
            other => Err(Error::Argument(format!(
                "unknown degree mode {other:?} (expected in, out or total)"
            ))),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct LinkGraph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    in_degree: Vec<u32>,
}

impl fmt::Debug for LinkGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinkGraph")
            .field("node_count", &self.node_count())
            .field("edge_count", &self.edge_count())
            .finish()
    }
}

/// Result of ingesting a raw edge sequence.
#[derive(Debug, Clone)]
pub struct EdgeLoad {
    pub graph: LinkGraph,
    /// Self-loops and repeated pairs removed during canonicalization.
    pub dropped: usize,
}

impl LinkGraph {
    /// Graph with `node_count` nodes and no edges.
    pub fn empty(node_count: usize) -> Self {
        LinkGraph {
            offsets: vec![0; node_count + 1],
            targets: Vec::new(),
            in_degree: vec![0; node_count],
        }
    }

    /// Builds the canonical graph from raw `(src, dst)` pairs.
    ///
    /// The node count is `1 + max id`, or `node_count` when given; an override
    /// smaller than an id actually used is rejected.
    pub fn from_edges<I>(edges: I, node_count: Option<usize>) -> Result<EdgeLoad>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let raw: Vec<(NodeId, NodeId)> = edges.into_iter().collect();
        let inferred = raw
            .iter()
            .map(|&(s, d)| s.max(d) as usize + 1)
            .max()
            .unwrap_or(0);
        let n = match node_count {
            Some(n) if n < inferred => return Err(Error::Argument(format!(
                "node count override {n} is smaller than the {inferred} nodes referenced by edges"
            ))),
            Some(n) => n,
            None => inferred,
        };
        if n > NodeId::MAX as usize {
            return Err(Error::Argument(format!("node count {n} exceeds id space")));
        }

        let total = raw.len();
        let mut edges: Vec<(NodeId, NodeId)> = raw.into_iter().filter(|(s, d)| s != d).collect();
        edges.sort_unstable();
        edges.dedup();
        let dropped = total - edges.len();

        Ok(EdgeLoad {
            graph: Self::from_sorted_unique(n, &edges),
            dropped,
        })
    }

    /// `edges` must be sorted, deduplicated and loop-free, with ids below `n`.
    fn from_sorted_unique(n: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        let mut in_degree = vec![0u32; n];
        for &(s, d) in edges {
            offsets[s as usize + 1] += 1;
            in_degree[d as usize] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = edges.iter().map(|&(_, d)| d).collect();
        LinkGraph {
            offsets,
            targets,
            in_degree,
        }
    }

    /// Parses a tab-separated edge list. Blank lines and `#` comments are skipped.
    pub fn read_edge_list<R: BufRead>(reader: R, node_count: Option<usize>) -> Result<EdgeLoad> {
        let mut edges = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let (Some(src), Some(dst), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected `src<TAB>dst`, got {trimmed:?}"),
                });
            };
            let parse = |tok: &str| {
                tok.parse::<NodeId>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("invalid node id {tok:?}"),
                })
            };
            edges.push((parse(src)?, parse(dst)?));
        }
        Self::from_edges(edges, node_count)
    }

    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (s, d) in self.edges() {
            writeln!(out, "{s}\t{d}")?;
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.in_degree.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_count() == 0
    }

    /// Sorted successors of `v`. Panics if `v` is out of range.
    #[inline]
    pub fn successors(&self, v: NodeId) -> &[NodeId] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn out_degree(&self, v: NodeId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_degree[v as usize] as usize
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        (src as usize) < self.node_count() && self.successors(src).binary_search(&dst).is_ok()
    }

    /// All edges in canonical (source, then target) order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count() as NodeId)
            .flat_map(move |s| self.successors(s).iter().map(move |&d| (s, d)))
    }

    pub fn degree(&self, v: NodeId, mode: DegreeMode) -> Result<usize> {
        if v as usize >= self.node_count() {
            return Err(Error::Argument(format!(
                "node {v} out of range (node count {})",
                self.node_count()
            )));
        }
        Ok(self.degree_unchecked(v, mode))
    }

    fn degree_unchecked(&self, v: NodeId, mode: DegreeMode) -> usize {
        match mode {
            DegreeMode::In => self.in_degree(v),
            DegreeMode::Out => self.out_degree(v),
            DegreeMode::Total => self.in_degree(v) + self.out_degree(v),
        }
    }

    /// Per-node degrees in node order.
    pub fn degrees(&self, mode: DegreeMode) -> Vec<usize> {
        (0..self.node_count() as NodeId)
            .map(|v| self.degree_unchecked(v, mode))
            .collect()
    }

    pub fn degree_histogram(&self, mode: DegreeMode) -> DegreeHistogram {
        DegreeHistogram::from_samples(self.degrees(mode))
    }

    /// Subgraph on `nodes` keeping every edge whose endpoints are both kept.
    pub fn induce_subgraph<I>(&self, nodes: I) -> Result<QueryInducedSubgraph>
    where
        I: IntoIterator<Item = NodeId>,
    {
        let mut to_global: Vec<NodeId> = nodes.into_iter().collect();
        to_global.sort_unstable();
        to_global.dedup();
        if let Some(&bad) = to_global
            .last()
            .filter(|&&v| v as usize >= self.node_count())
        {
            return Err(Error::Argument(format!(
                "node {bad} out of range (node count {})",
                self.node_count()
            )));
        }

        let mut edges = Vec::new();
        for (local_src, &global_src) in to_global.iter().enumerate() {
            for &global_dst in self.successors(global_src) {
                if let Ok(local_dst) = to_global.binary_search(&global_dst) {
                    edges.push((local_src as NodeId, local_dst as NodeId));
                }
            }
        }
        // Sources ascend and each successor list is sorted, so local edges are
        // already canonical.
        let graph = LinkGraph::from_sorted_unique(to_global.len(), &edges);
        Ok(QueryInducedSubgraph {
            graph,
            to_global,
            query: String::new(),
        })
    }
}

/// A subgraph restricted to the documents matching one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryInducedSubgraph {
    pub graph: LinkGraph,
    /// Local id to parent-graph id, strictly increasing.
    pub to_global: Vec<NodeId>,
    pub query: String,
}

impl QueryInducedSubgraph {
    pub fn with_query(mut self, query: impl Into<String>) -> Self {
        self.query = query.into();
        self
    }

    pub fn global_of(&self, local: NodeId) -> NodeId {
        self.to_global[local as usize]
    }

    pub fn local_of(&self, global: NodeId) -> Option<NodeId> {
        self.to_global
            .binary_search(&global)
            .ok()
            .map(|i| i as NodeId)
    }
}

/// Degree frequency table plus the raw per-node samples it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeHistogram {
    pub counts: BTreeMap<usize, usize>,
    pub samples: Vec<usize>,
}

impl DegreeHistogram {
    pub fn from_samples(samples: Vec<usize>) -> Self {
        let mut counts = BTreeMap::new();
        for &d in &samples {
            *counts.entry(d).or_insert(0) += 1;
        }
        DegreeHistogram { counts, samples }
    }

    pub fn total(&self) -> usize {
        self.samples.len()
    }

    /// `(d, P(X >= d))` for every observed degree `d`, ascending.
    pub fn ccdf(&self) -> Vec<(usize, f64)> {
        let n = self.total() as f64;
        let mut remaining = self.total();
        let mut out = Vec::with_capacity(self.counts.len());
        for (&d, &c) in &self.counts {
            out.push((d, remaining as f64 / n));
            remaining -= c;
        }
        out
    }

    pub fn mean(&self) -> Option<f64> {
        if self.samples.is_empty() {
            return None;
        }
        Some(self.samples.iter().sum::<usize>() as f64 / self.samples.len() as f64)
    }

    /// Median, averaging the two middle values for even counts.
    pub fn median(&self) -> Option<f64> {
        let n = self.total();
        if n == 0 {
            return None;
        }
        let nth = |k: usize| -> usize {
            let mut seen = 0;
            for (&d, &c) in &self.counts {
                seen += c;
                if seen > k {
                    return d;
                }
            }
            unreachable!("rank within total")
        };
        if n % 2 == 1 {
            Some(nth(n / 2) as f64)
        } else {
            Some((nth(n / 2 - 1) + nth(n / 2)) as f64 / 2.0)
        }
    }
}
