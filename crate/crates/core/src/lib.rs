//! Search-result clustering over query-induced link subgraphs.
//!
//! A query selects the matching documents from an inverted index; the hyperlink
//! graph restricted to those documents is partitioned by randomized walks whose
//! visit counts are merged around shared high-traffic pivot nodes. The crate
//! also fits discrete power-law degree distributions and scores clusterings by
//! edge coverage.

pub mod error;
pub mod graph;
pub mod metrics;
pub mod powerlaw;
pub mod rng;
pub mod rwalk;
pub mod search;
pub mod snapshot;
pub mod synth;
pub mod textindex;

pub use error::{Error, Result};
pub use graph::{DegreeHistogram, DegreeMode, LinkGraph, NodeId, QueryInducedSubgraph};
pub use metrics::CoverageReport;
pub use powerlaw::{Estimator, PowerLawFit};
pub use rwalk::{Clustering, Termination, Walk, WalkConfig};
pub use snapshot::Snapshot;
pub use textindex::{Document, InvertedIndex};
