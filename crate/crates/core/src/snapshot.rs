//! Immutable on-disk snapshot: canonical edge list, canonical corpus and a
//! manifest with counts and SHA-256 checksums.
//!
//! ```text
//! <dir>/manifest      JSON, see [`Manifest`]
//! <dir>/edges.tsv     src<TAB>dst, canonical order
//! <dir>/corpus.jsonl  one document per line, ascending id
//! ```

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{LinkGraph, NodeId};
use crate::textindex::{read_corpus, write_corpus, Document, InvertedIndex};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest";
pub const EDGES_FILE: &str = "edges.tsv";
pub const CORPUS_FILE: &str = "corpus.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub node_count: usize,
    pub edge_count: usize,
    pub doc_count: usize,
    pub term_count: usize,
    /// Self-loops and duplicates removed while ingesting.
    pub dropped_edges: usize,
    pub edges_sha256: String,
    pub corpus_sha256: String,
    /// Digest over both file digests; identifies the snapshot content.
    pub checksum: String,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub graph: LinkGraph,
    pub index: InvertedIndex,
    /// Sorted by id.
    pub docs: Vec<Document>,
    pub manifest: Manifest,
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn combined_checksum(edges: &str, corpus: &str) -> String {
    hex_digest(format!("v{FORMAT_VERSION}:{edges}:{corpus}").as_bytes())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

impl Snapshot {
    /// Validates the inputs and assembles an in-memory snapshot.
    ///
    /// The node count is `node_count` when given, otherwise large enough for
    /// every edge endpoint and document id. Documents outside the node range
    /// are reported together.
    pub fn assemble(
        edges: Vec<(NodeId, NodeId)>,
        mut docs: Vec<Document>,
        node_count: Option<usize>,
    ) -> Result<Self> {
        let doc_bound = docs.iter().map(|d| d.id as usize + 1).max().unwrap_or(0);
        let edge_bound = edges
            .iter()
            .map(|&(s, d)| s.max(d) as usize + 1)
            .max()
            .unwrap_or(0);
        let n = node_count.unwrap_or(doc_bound.max(edge_bound));

        let offenders: Vec<NodeId> = docs
            .iter()
            .map(|d| d.id)
            .filter(|&id| id as usize >= n)
            .collect();
        if !offenders.is_empty() {
            let shown: Vec<String> = offenders.iter().take(20).map(|id| id.to_string()).collect();
            return Err(Error::Snapshot(format!(
                "{} document id(s) outside the graph's {n} nodes: {}{}",
                offenders.len(),
                shown.join(", "),
                if offenders.len() > 20 { ", ..." } else { "" }
            )));
        }

        let load = LinkGraph::from_edges(edges, Some(n))?;
        docs.sort_by_key(|d| d.id);
        let index = InvertedIndex::build(&docs)?;

        let mut edges_buf = Vec::new();
        load.graph
            .write_edge_list(&mut edges_buf)
            .expect("writing to memory");
        let mut corpus_buf = Vec::new();
        write_corpus(&mut corpus_buf, &docs).expect("writing to memory");
        let edges_sha256 = hex_digest(&edges_buf);
        let corpus_sha256 = hex_digest(&corpus_buf);

        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            node_count: n,
            edge_count: load.graph.edge_count(),
            doc_count: docs.len(),
            term_count: index.term_count(),
            dropped_edges: load.dropped,
            checksum: combined_checksum(&edges_sha256, &corpus_sha256),
            edges_sha256,
            corpus_sha256,
        };
        Ok(Snapshot {
            graph: load.graph,
            index,
            docs,
            manifest,
        })
    }

    /// Reads an edge list and a corpus file and assembles a snapshot.
    pub fn ingest(
        edges_path: &Path,
        corpus_path: &Path,
        node_count: Option<usize>,
    ) -> Result<Self> {
        let edge_file = fs::File::open(edges_path).map_err(|e| Error::io(edges_path, e))?;
        // Parse through the graph reader for line-numbered errors, then
        // re-assemble with the final node count.
        let parsed = LinkGraph::read_edge_list(BufReader::new(edge_file), None)?;
        let corpus_file = fs::File::open(corpus_path).map_err(|e| Error::io(corpus_path, e))?;
        let docs = read_corpus(BufReader::new(corpus_file))?;
        let mut snapshot = Self::assemble(parsed.graph.edges().collect(), docs, node_count)?;
        snapshot.manifest.dropped_edges += parsed.dropped;
        Ok(snapshot)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| -> Result<(std::path::PathBuf, BufWriter<fs::File>)> {
            let path = dir.join(name);
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            Ok((path, BufWriter::new(file)))
        };

        let (path, mut out) = create(EDGES_FILE)?;
        self.graph
            .write_edge_list(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(&path, e))?;

        let (path, mut out) = create(CORPUS_FILE)?;
        write_corpus(&mut out, &self.docs)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(&path, e))?;

        let (path, mut out) = create(MANIFEST_FILE)?;
        serde_json::to_writer_pretty(&mut out, &self.manifest)
            .map_err(std::io::Error::from)
            .and_then(|_| out.write_all(b"\n"))
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(&path, e))?;
        Ok(())
    }

    /// Loads and verifies a snapshot directory.
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::Snapshot(format!(
                "{} is not a snapshot directory",
                dir.display()
            )));
        }
        let manifest_bytes = read_file(&dir.join(MANIFEST_FILE))?;
        let manifest: Manifest = serde_json::from_slice(&manifest_bytes)
            .map_err(|e| Error::Snapshot(format!("unreadable manifest: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot format version {} (expected {FORMAT_VERSION})",
                manifest.format_version
            )));
        }

        let edges_bytes = read_file(&dir.join(EDGES_FILE))?;
        let corpus_bytes = read_file(&dir.join(CORPUS_FILE))?;
        for (name, bytes, expected) in [
            (EDGES_FILE, &edges_bytes, &manifest.edges_sha256),
            (CORPUS_FILE, &corpus_bytes, &manifest.corpus_sha256),
        ] {
            let actual = hex_digest(bytes);
            if &actual != expected {
                return Err(Error::Snapshot(format!(
                    "{name} checksum mismatch: manifest {expected}, file {actual}"
                )));
            }
        }

        let graph = LinkGraph::read_edge_list(edges_bytes.as_slice(), Some(manifest.node_count))?;
        let docs = read_corpus(corpus_bytes.as_slice())?;
        let snapshot = Self::assemble(
            graph.graph.edges().collect(),
            docs,
            Some(manifest.node_count),
        )?;

        let rebuilt = &snapshot.manifest;
        if rebuilt.edge_count != manifest.edge_count
            || rebuilt.doc_count != manifest.doc_count
            || rebuilt.checksum != manifest.checksum
        {
            return Err(Error::Snapshot(
                "snapshot contents disagree with manifest counts".into(),
            ));
        }
        Ok(Snapshot {
            manifest,
            ..snapshot
        })
    }

    pub fn doc(&self, id: NodeId) -> Option<&Document> {
        self.docs
            .binary_search_by_key(&id, |d| d.id)
            .ok()
            .map(|i| &self.docs[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: NodeId, text: &str) -> Document {
        Document {
            id,
            url: format!("https://example.org/{id}"),
            text: text.into(),
        }
    }

    fn tiny() -> Snapshot {
        Snapshot::assemble(
            vec![(0, 1), (1, 2), (2, 0), (1, 1)],
            vec![doc(2, "beograd"), doc(0, "politika beograd")],
            None,
        )
        .unwrap()
    }

    #[test]
    fn assemble_counts_and_sorting() {
        let s = tiny();
        assert_eq!(s.manifest.node_count, 3);
        assert_eq!(s.manifest.edge_count, 3);
        assert_eq!(s.manifest.dropped_edges, 1);
        assert_eq!(s.manifest.doc_count, 2);
        assert_eq!(s.docs[0].id, 0);
        assert_eq!(s.doc(2).unwrap().text, "beograd");
        assert!(s.doc(1).is_none());
    }

    #[test]
    fn offenders_are_listed() {
        let err =
            Snapshot::assemble(vec![(0, 1)], vec![doc(5, "a"), doc(9, "b")], Some(3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('5') && msg.contains('9'), "{msg}");
    }

    #[test]
    fn write_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = tiny();
        s.write(dir.path()).unwrap();
        let back = Snapshot::load(dir.path()).unwrap();
        assert_eq!(back.graph, s.graph);
        assert_eq!(back.docs, s.docs);
        assert_eq!(back.manifest, s.manifest);
    }

    #[test]
    fn corrupt_files_are_detected() {
        let dir = tempfile::tempdir().unwrap();
        tiny().write(dir.path()).unwrap();
        fs::write(dir.path().join(EDGES_FILE), "0\t2\n").unwrap();
        let err = Snapshot::load(dir.path()).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");

        let missing = tempfile::tempdir().unwrap();
        assert!(Snapshot::load(missing.path()).is_err());
        assert!(Snapshot::load(&missing.path().join("nope")).is_err());
    }
}
