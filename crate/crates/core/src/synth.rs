//! Synthetic link graph plus corpus, standing in for a crawled web.
//!
//! Every node first draws 5 to 20 "own" terms from a Zipf rank-frequency
//! vocabulary. Its final text keeps each own term or, with probability
//! `link_affinity`, replaces it by a term borrowed from a random out-neighbour's
//! own terms. Pages therefore share vocabulary with the pages they link to,
//! which gives term-matched node sets link structure of their own.

use rand::Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::graph::{LinkGraph, NodeId};
use crate::powerlaw::{generate_graph_with, GraphParams};
use crate::rng::{derive_seed, stream_rng};
use crate::textindex::Document;

/// Leading vocabulary entries, most frequent first.
const SEED_WORDS: &[&str] = &[
    "beograd",
    "politika",
    "pravda",
    "rubrike",
    "shop",
    "nekretnine",
    "leasing",
    "dekanat",
    "banking",
    "expo",
    "filologija",
    "univerzitet",
    "vesti",
    "sport",
    "kultura",
    "muzika",
    "fakultet",
    "biblioteka",
    "turizam",
    "zdravlje",
];

const SYLLABLES: &[&str] = &[
    "ba", "ce", "di", "fo", "gu", "ka", "le", "mi", "no", "pu", "ra", "se", "ti", "vo", "zu",
    "bra", "kre", "pli", "sto", "tru",
];

const MIN_TERMS: usize = 5;
const MAX_TERMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub nodes: usize,
    pub beta_in: f64,
    pub beta_out: f64,
    pub x_min: usize,
    /// Fraction of pages without out-links.
    pub dangling: f64,
    pub vocab_size: usize,
    /// Zipf exponent of the term rank-frequency law.
    pub zipf_exponent: f64,
    /// Probability that a term slot is borrowed from an out-neighbour.
    pub link_affinity: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            nodes: 5000,
            beta_in: 2.5,
            beta_out: 2.5,
            x_min: 1,
            dangling: 0.2,
            vocab_size: 2000,
            zipf_exponent: 1.0,
            link_affinity: 0.5,
        }
    }
}

/// Word for vocabulary rank `rank` (0-based). Distinct ranks give distinct,
/// purely alphabetic words.
pub fn vocabulary_word(rank: usize) -> String {
    if let Some(w) = SEED_WORDS.get(rank) {
        return (*w).to_owned();
    }
    // Bijective base-|SYLLABLES| numbering with a two-syllable minimum; the
    // trailing "x" keeps generated words disjoint from the seed list.
    let base = SYLLABLES.len();
    let mut r = rank - SEED_WORDS.len() + base;
    let mut parts = Vec::new();
    loop {
        parts.push(SYLLABLES[r % base]);
        r /= base;
        if r == 0 {
            break;
        }
        r -= 1;
    }
    parts.reverse();
    let mut word = parts.concat();
    word.push('x');
    word
}

pub fn generate_corpus(
    graph: &LinkGraph,
    params: &SynthParams,
    seed: u64,
) -> Result<Vec<Document>> {
    if params.vocab_size == 0 {
        return Err(Error::Argument("vocabulary must not be empty".into()));
    }
    if !(0.0..=1.0).contains(&params.link_affinity) {
        return Err(Error::Argument(format!(
            "link affinity must be in [0, 1], got {}",
            params.link_affinity
        )));
    }
    let zipf = Zipf::new(params.vocab_size as f64, params.zipf_exponent)
        .map_err(|e| Error::Argument(format!("invalid Zipf parameters: {e}")))?;
    let corpus_seed = derive_seed(seed, &[b"corpus"]);
    let borrow_seed = derive_seed(seed, &[b"borrow"]);
    let n = graph.node_count();

    let own: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut rng = stream_rng(corpus_seed, v as u64);
            let count = rng.random_range(MIN_TERMS..=MAX_TERMS);
            (0..count)
                .map(|_| zipf.sample(&mut rng) as usize - 1)
                .collect()
        })
        .collect();

    let docs = (0..n as NodeId)
        .map(|v| {
            let mut rng = stream_rng(borrow_seed, v as u64);
            let succ = graph.successors(v);
            let terms: Vec<String> = own[v as usize]
                .iter()
                .map(|&rank| {
                    let rank = if !succ.is_empty() && rng.random_bool(params.link_affinity) {
                        let donor = &own[succ[rng.random_range(0..succ.len())] as usize];
                        donor[rng.random_range(0..donor.len())]
                    } else {
                        rank
                    };
                    vocabulary_word(rank)
                })
                .collect();
            Document {
                id: v,
                url: format!("https://site{}.example.org/page/{v}", v / 50),
                text: terms.join(" "),
            }
        })
        .collect();
    Ok(docs)
}

/// Graph and matching corpus for `params`, deterministic per seed.
pub fn generate(params: &SynthParams, seed: u64) -> Result<(LinkGraph, Vec<Document>)> {
    let graph = generate_graph_with(
        GraphParams {
            nodes: params.nodes,
            beta_in: params.beta_in,
            beta_out: params.beta_out,
            x_min: params.x_min,
            dangling: params.dangling,
        },
        seed,
    )?;
    let docs = generate_corpus(&graph, params, seed)?;
    Ok((graph, docs))
}
