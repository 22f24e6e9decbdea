//! Query-time pipeline over a snapshot: match, induce, cluster, report.
//!
//! The response types here are the JSON wire format of the HTTP service; the
//! CLI renders the same values, so both paths stay byte-compatible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DegreeMode, NodeId, QueryInducedSubgraph};
use crate::metrics::{self, CoverageReport, SweepRow};
use crate::powerlaw::{self, Estimator, PowerLawFit};
use crate::rng::derive_seed;
use crate::rwalk::{self, Clustering, WalkConfig};
use crate::snapshot::Snapshot;
use crate::textindex::tokenize;

pub const DEFAULT_LIMIT: usize = 50;
const SNIPPET_CHARS: usize = 160;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub k: f64,
    pub tcm: f64,
    pub seed: u64,
    pub max_walk_factor: f64,
}

impl SearchParams {
    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            k: self.k,
            max_walk_factor: self.max_walk_factor,
            t_cm: self.tcm,
            seed: self.seed,
        }
    }
}

impl From<WalkConfig> for SearchParams {
    fn from(cfg: WalkConfig) -> Self {
        SearchParams {
            k: cfg.k,
            tcm: cfg.t_cm,
            seed: cfg.seed,
            max_walk_factor: cfg.max_walk_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocView {
    pub id: NodeId,
    pub url: String,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterView {
    pub id: usize,
    pub pivot_doc: DocView,
    pub size: usize,
    /// Pivot first, then by descending visit count; at most `limit` entries.
    pub docs: Vec<DocView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub size: usize,
    pub docs: Vec<DocView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub params: SearchParams,
    pub coverage_report: CoverageReport,
    pub clusters: Vec<ClusterView>,
    pub unassigned: Bucket,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub nodes: usize,
    pub edges: usize,
}

/// Body of every non-2xx service response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub kind: String,
}

/// Result of clustering one query's induced subgraph, in local ids.
#[derive(Debug, Clone)]
pub struct QueryClustering {
    pub subgraph: QueryInducedSubgraph,
    pub clustering: Clustering,
    pub report: CoverageReport,
}

fn require_query(q: &str) -> Result<()> {
    if tokenize(q).is_empty() {
        Err(Error::Argument(
            "query must contain at least one term".into(),
        ))
    } else {
        Ok(())
    }
}

pub fn induce_query(snapshot: &Snapshot, q: &str) -> Result<QueryInducedSubgraph> {
    let nodes = snapshot.index.match_query(q);
    Ok(snapshot.graph.induce_subgraph(nodes)?.with_query(q))
}

/// Clusters a subgraph; an empty subgraph yields an empty clustering.
pub fn cluster_subgraph(sub: QueryInducedSubgraph, cfg: &WalkConfig) -> Result<QueryClustering> {
    cfg.validate()?;
    let clustering = if sub.graph.is_empty() {
        Clustering::default()
    } else {
        rwalk::cluster(&sub.graph, cfg)?
    };
    let report = metrics::report(&sub.graph, &clustering, None)?;
    Ok(QueryClustering {
        subgraph: sub,
        clustering,
        report,
    })
}

pub fn cluster_query(snapshot: &Snapshot, q: &str, cfg: &WalkConfig) -> Result<QueryClustering> {
    require_query(q)?;
    cfg.validate()?;
    cluster_subgraph(induce_query(snapshot, q)?, cfg)
}

fn snippet(text: &str) -> String {
    match text.char_indices().nth(SNIPPET_CHARS) {
        Some((end, _)) => text[..end].to_owned(),
        None => text.to_owned(),
    }
}

fn doc_view(snapshot: &Snapshot, id: NodeId) -> DocView {
    match snapshot.doc(id) {
        Some(d) => DocView {
            id,
            url: d.url.clone(),
            snippet: snippet(&d.text),
        },
        None => DocView {
            id,
            url: String::new(),
            snippet: String::new(),
        },
    }
}

/// Full search: clusters sorted by size (descending, then pivot id), member
/// and unassigned lists truncated to `limit` with exact sizes.
pub fn search(
    snapshot: &Snapshot,
    q: &str,
    params: &SearchParams,
    limit: usize,
) -> Result<SearchResponse> {
    let qc = cluster_query(snapshot, q, &params.walk_config())?;
    Ok(render(snapshot, &qc, params, limit))
}

pub fn render(
    snapshot: &Snapshot,
    qc: &QueryClustering,
    params: &SearchParams,
    limit: usize,
) -> SearchResponse {
    let sub = &qc.subgraph;
    let global = |local: NodeId| sub.global_of(local);

    let mut clusters: Vec<_> = qc.clustering.clusters.iter().collect();
    clusters.sort_by_key(|c| (std::cmp::Reverse(c.len()), global(c.pivot)));

    let views = clusters
        .into_iter()
        .enumerate()
        .map(|(id, c)| {
            let pivot_count = c.members.iter().find(|m| m.0 == c.pivot).map(|m| m.1);
            let mut order: Vec<(NodeId, u64)> = c
                .members
                .iter()
                .copied()
                .filter(|&(v, _)| v != c.pivot)
                .collect();
            order.sort_by_key(|&(v, n)| (std::cmp::Reverse(n), global(v)));
            let docs = std::iter::once((c.pivot, pivot_count.unwrap_or(0)))
                .chain(order)
                .take(limit)
                .map(|(v, _)| doc_view(snapshot, global(v)))
                .collect();
            ClusterView {
                id,
                pivot_doc: doc_view(snapshot, global(c.pivot)),
                size: c.len(),
                docs,
            }
        })
        .collect();

    let unassigned = Bucket {
        size: qc.clustering.unassigned.len(),
        docs: qc
            .clustering
            .unassigned
            .iter()
            .take(limit)
            .map(|&v| doc_view(snapshot, global(v)))
            .collect(),
    };

    SearchResponse {
        query: sub.query.clone(),
        params: params.clone(),
        coverage_report: qc.report.clone(),
        clusters: views,
        unassigned,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResponse {
    /// `"full"` or `"query"`.
    pub scope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    pub mode: DegreeMode,
    pub estimator: Estimator,
    pub node_count: usize,
    pub edge_count: usize,
    /// `[degree, node count]` pairs, ascending degree.
    pub histogram: Vec<[usize; 2]>,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub fit: Option<PowerLawFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Degree statistics and power-law fit for the full graph, or for the
/// query's induced subgraph when `q` is given.
pub fn stats(
    snapshot: &Snapshot,
    q: Option<&str>,
    mode: DegreeMode,
    x_min: usize,
    estimator: Estimator,
) -> Result<StatsResponse> {
    if x_min == 0 {
        return Err(Error::Argument("xmin must be >= 1".into()));
    }
    let (scope, query, hist, nodes, edges) = match q {
        Some(q) => {
            require_query(q)?;
            let sub = induce_query(snapshot, q)?;
            let hist = sub.graph.degree_histogram(mode);
            (
                "query",
                Some(q.to_owned()),
                hist,
                sub.graph.node_count(),
                sub.graph.edge_count(),
            )
        }
        None => (
            "full",
            None,
            snapshot.graph.degree_histogram(mode),
            snapshot.graph.node_count(),
            snapshot.graph.edge_count(),
        ),
    };
    let (fit, reason) = match powerlaw::fit(&hist.samples, x_min, estimator) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(StatsResponse {
        scope: scope.to_owned(),
        query,
        mode,
        estimator,
        node_count: nodes,
        edge_count: edges,
        histogram: hist.counts.iter().map(|(&d, &c)| [d, c]).collect(),
        median: hist.median(),
        mean: hist.mean(),
        fit,
        reason,
    })
}

/// Sub-seed for one sweep row.
pub fn sweep_row_seed(seed: u64, query: &str, k: f64, trial: usize) -> u64 {
    derive_seed(
        seed,
        &[
            query.as_bytes(),
            &k.to_bits().to_le_bytes(),
            &(trial as u64).to_le_bytes(),
        ],
    )
}

/// One row per `(query, k, trial)`, query-major. Rows are computed in
/// parallel; each uses its own derived seed.
pub fn sweep_k(
    snapshot: &Snapshot,
    queries: &[String],
    k_values: &[f64],
    trials: usize,
    seed: u64,
    base: &WalkConfig,
) -> Result<Vec<SweepRow>> {
    if let Some(&k) = k_values.iter().find(|&&k| !(k > 0.0 && k <= 1.0)) {
        return Err(Error::Argument(format!("k must be in (0, 1], got {k}")));
    }
    base.validate()?;
    for q in queries {
        require_query(q)?;
    }
    let subgraphs: Vec<QueryInducedSubgraph> = queries
        .par_iter()
        .map(|q| induce_query(snapshot, q))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, f64, usize)> = (0..queries.len())
        .flat_map(|qi| {
            k_values
                .iter()
                .flat_map(move |&k| (0..trials).map(move |t| (qi, k, t)))
        })
        .collect();

    jobs.par_iter()
        .map(|&(qi, k, trial)| {
            let query = &queries[qi];
            let cfg = WalkConfig {
                k,
                seed: sweep_row_seed(seed, query, k, trial),
                ..*base
            };
            let qc = cluster_subgraph(subgraphs[qi].clone(), &cfg)?;
            Ok(SweepRow {
                query: query.clone(),
                k,
                trial,
                coverage: qc.report.coverage,
                n_clusters: qc.report.n_clusters,
                max_size: qc.report.max_size,
            })
        })
        .collect()
}

/// `0.1, 0.2, ..., 1.0`.
pub fn default_k_values() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}
