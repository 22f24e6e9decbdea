//! Clustering quality: edge coverage and per-query cluster statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LinkGraph;
use crate::rwalk::Clustering;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Fraction of edges with both endpoints in one cluster.
    pub coverage: f64,
    pub n_links: usize,
    /// Intra-cluster edge count.
    pub incluster: usize,
    pub n_clusters: usize,
    pub max_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
}

pub const TABLE_HEADER: &str = "query\tcoverage\tn.links\tincluster\tn.clusters\tmax size";

impl CoverageReport {
    pub fn intercluster(&self) -> usize {
        self.n_links - self.incluster
    }

    /// One tab-separated row under [`TABLE_HEADER`].
    pub fn table_row(&self) -> String {
        format!(
            "{}\t{:.3}\t{}\t{}\t{}\t{}",
            self.query.as_deref().unwrap_or("-"),
            self.coverage,
            self.n_links,
            self.incluster,
            self.n_clusters,
            self.max_size
        )
    }

    /// Parses a row of the form `query & coverage & n.links & incluster &
    /// n.clusters & max size`; `&`, tab and `|` all work as separators.
    pub fn parse_table_row(row: &str) -> Result<Self> {
        let fields: Vec<&str> = row
            .trim()
            .trim_end_matches("\\\\")
            .split(['&', '\t', '|'])
            .map(str::trim)
            .collect();
        let bad = |msg: String| Error::Parse { line: 1, msg };
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 fields, got {}", fields.len())));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("invalid count {s:?}")))
        };
        let coverage: f64 = fields[1]
            .parse()
            .map_err(|_| bad(format!("invalid coverage {:?}", fields[1])))?;
        let report = CoverageReport {
            query: Some(fields[0].to_owned()),
            coverage,
            n_links: int(fields[2])?,
            incluster: int(fields[3])?,
            n_clusters: int(fields[4])?,
            max_size: int(fields[5])?,
        };
        if report.incluster > report.n_links || !(0.0..=1.0).contains(&coverage) {
            return Err(bad("row violates coverage bounds".into()));
        }
        Ok(report)
    }
}

/// Per-node cluster label; unassigned nodes get unique labels past the
/// cluster range.
fn labels(g: &LinkGraph, c: &Clustering) -> Result<Vec<usize>> {
    let n = g.node_count();
    let mut label = vec![usize::MAX; n];
    for (i, cluster) in c.clusters.iter().enumerate() {
        for v in cluster.nodes() {
            let slot = label.get_mut(v as usize).ok_or_else(|| {
                Error::Argument(format!("clustered node {v} not in graph of {n} nodes"))
            })?;
            *slot = i;
        }
    }
    if let Some(&v) = c.unassigned.iter().find(|&&v| v as usize >= n) {
        return Err(Error::Argument(format!(
            "unassigned node {v} not in graph of {n} nodes"
        )));
    }
    let base = c.clusters.len();
    for (v, l) in label.iter_mut().enumerate() {
        if *l == usize::MAX {
            *l = base + v;
        }
    }
    Ok(label)
}

fn intra_edges(g: &LinkGraph, c: &Clustering) -> Result<usize> {
    let label = labels(g, c)?;
    Ok(g.edges()
        .filter(|&(s, d)| label[s as usize] == label[d as usize])
        .count())
}

/// Intra-cluster edges over all edges; 1.0 for an edgeless graph.
pub fn coverage(g: &LinkGraph, c: &Clustering) -> Result<f64> {
    let m = g.edge_count();
    let intra = intra_edges(g, c)?;
    Ok(if m == 0 { 1.0 } else { intra as f64 / m as f64 })
}

pub fn report(g: &LinkGraph, c: &Clustering, query: Option<&str>) -> Result<CoverageReport> {
    let n_links = g.edge_count();
    let incluster = intra_edges(g, c)?;
    Ok(CoverageReport {
        coverage: if n_links == 0 {
            1.0
        } else {
            incluster as f64 / n_links as f64
        },
        n_links,
        incluster,
        n_clusters: c.len(),
        max_size: c.max_size(),
        query: query.map(str::to_owned),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub query: String,
    pub k: f64,
    pub trial: usize,
    pub coverage: f64,
    pub n_clusters: usize,
    pub max_size: usize,
}

pub const SWEEP_HEADER: &str = "query,k,trial,coverage,n_clusters,max_size";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.query),
            r.k,
            r.trial,
            r.coverage,
            r.n_clusters,
            r.max_size
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_graph() -> LinkGraph {
        LinkGraph::from_edges([(0, 1), (1, 2), (2, 0), (3, 4)], None)
            .unwrap()
            .graph
    }

    #[test]
    fn coverage_examples() {
        let g = sample_graph();
        let whole = Clustering::from_groups(vec![vec![0, 1, 2], vec![3, 4]], 5);
        assert_eq!(coverage(&g, &whole).unwrap(), 1.0);

        let split = Clustering::from_groups(vec![vec![0, 1], vec![2], vec![3, 4]], 5);
        assert_eq!(coverage(&g, &split).unwrap(), 0.5);

        let singletons = Clustering::from_groups((0..5).map(|v| vec![v]).collect(), 5);
        assert_eq!(coverage(&g, &singletons).unwrap(), 0.0);

        let nothing = Clustering::from_groups(vec![], 5);
        assert_eq!(coverage(&g, &nothing).unwrap(), 0.0);

        let one = Clustering::from_groups(vec![(0..5).collect()], 5);
        assert_eq!(coverage(&g, &one).unwrap(), 1.0);
    }

    #[test]
    fn report_example() {
        let g = sample_graph();
        let split = Clustering::from_groups(vec![vec![0, 1], vec![2], vec![3, 4]], 5);
        let r = report(&g, &split, None).unwrap();
        assert_eq!(
            r,
            CoverageReport {
                coverage: 0.5,
                n_links: 4,
                incluster: 2,
                n_clusters: 3,
                max_size: 2,
                query: None,
            }
        );
        assert_eq!(r.intercluster(), 2);
    }

    #[test]
    fn edgeless_convention() {
        let g = LinkGraph::empty(3);
        let r = report(&g, &Clustering::from_groups(vec![], 3), Some("q")).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert_eq!(r.n_links, 0);
        assert_eq!(r.incluster, 0);
        assert_eq!(r.n_clusters, 0);
    }

    #[test]
    fn foreign_node_is_rejected() {
        let g = sample_graph();
        let c = Clustering::from_groups(vec![vec![0, 9]], 10);
        assert!(matches!(coverage(&g, &c), Err(Error::Argument(_))));
    }

    #[test]
    fn parses_table_rows() {
        let r = CoverageReport::parse_table_row("politika & 0.999 & 37473 & 37417 & 29 & 820\\\\")
            .unwrap();
        assert_eq!(r.query.as_deref(), Some("politika"));
        assert_eq!(r.coverage, 0.999);
        assert_eq!(
            (r.n_links, r.incluster, r.n_clusters, r.max_size),
            (37473, 37417, 29, 820)
        );
        assert!(CoverageReport::parse_table_row("x & 0.5 & 1 & 2 & 1 & 1").is_err());
        assert!(CoverageReport::parse_table_row("x & 0.5 & 1").is_err());

        let back = CoverageReport::parse_table_row(&r.table_row()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn sweep_csv_shape() {
        let rows = vec![SweepRow {
            query: "a,b".into(),
            k: 0.1,
            trial: 0,
            coverage: 0.25,
            n_clusters: 3,
            max_size: 4,
        }];
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "query,k,trial,coverage,n_clusters,max_size\n\"a,b\",0.1,0,0.25,3,4\n"
        );
    }
}
