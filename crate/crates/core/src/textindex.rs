//! Documents, tokenization and a conjunctive inverted index.
//!
//! Document ids share the graph's node id space, so a query's matching set is
//! directly the node set of its induced subgraph.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: NodeId,
    pub url: String,
    pub text: String,
}

/// Lowercased maximal runs of Unicode letters and digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Reads one JSON document per line; blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus<'a, W, I>(mut out: W, docs: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Document>,
{
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvertedIndex {
    postings: HashMap<String, Vec<NodeId>>,
    doc_count: usize,
}

impl InvertedIndex {
    pub fn build<'a, I>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let mut seen = HashSet::new();
        let mut postings: HashMap<String, Vec<NodeId>> = HashMap::new();
        for doc in docs {
            if !seen.insert(doc.id) {
                return Err(Error::Build(format!("duplicate doc id {}", doc.id)));
            }
            let mut terms = tokenize(&doc.text);
            terms.sort_unstable();
            terms.dedup();
            for term in terms {
                postings.entry(term).or_default().push(doc.id);
            }
        }
        for list in postings.values_mut() {
            list.sort_unstable();
        }
        Ok(InvertedIndex {
            postings,
            doc_count: seen.len(),
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn postings(&self, term: &str) -> &[NodeId] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Largest doc id referenced by any posting.
    pub fn max_doc_id(&self) -> Option<NodeId> {
        self.postings
            .values()
            .filter_map(|p| p.last().copied())
            .max()
    }

    /// Terms ordered by descending document frequency, ties broken alphabetically.
    pub fn terms_by_frequency(&self) -> Vec<(&str, usize)> {
        let mut terms: Vec<(&str, usize)> = self
            .postings
            .iter()
            .map(|(t, p)| (t.as_str(), p.len()))
            .collect();
        terms.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        terms
    }

    /// Documents containing every distinct query term, ascending.
    pub fn match_query(&self, query: &str) -> Vec<NodeId> {
        let mut terms = tokenize(query);
        terms.sort_unstable();
        terms.dedup();
        if terms.is_empty() {
            return Vec::new();
        }
        let mut lists: Vec<&[NodeId]> = terms.iter().map(|t| self.postings(t)).collect();
        lists.sort_by_key(|l| l.len());

        let mut result = lists[0].to_vec();
        for list in &lists[1..] {
            if result.is_empty() {
                break;
            }
            result.retain(|id| list.binary_search(id).is_ok());
        }
        result
    }
}
