//! Okapi BM25 inverted index.
//!
//! ```text
//! score(D, Q) = sum_q IDF(q) * f(q,D) * (k1 + 1) / (f(q,D) + k1 * (1 - b + b * |D| / avgdl))
//! IDF(q)      = ln((N - n_q + 0.5) / (n_q + 0.5) + 1)
//! ```
//!
//! The `+1` inside the logarithm keeps IDF strictly positive, so every
//! matching chunk scores above zero.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenizer::tokenize;
use crate::error::{Error, Result};
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::Config(format!("bm25 k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!("bm25 b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    /// Position of the chunk in the corpus.
    pub ordinal: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexicalIndex {
    params: Bm25Params,
    chunk_ids: Vec<String>,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avgdl: f64,
}

pub fn idf(n_docs: usize, n_q: usize) -> f64 {
    let (n, nq) = (n_docs as f64, n_q as f64);
    ((n - nq + 0.5) / (nq + 0.5) + 1.0).ln()
}

impl LexicalIndex {
    /// Builds from pre-tokenized documents, in order.
    pub fn from_tokens(docs: Vec<(String, Vec<String>)>, params: Bm25Params) -> Result<Self> {
        params.validate()?;
        let mut chunk_ids = Vec::with_capacity(docs.len());
        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();

        for (ordinal, (id, tokens)) in docs.into_iter().enumerate() {
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting {
                    ordinal: ordinal as u32,
                    tf: count,
                });
            }
            chunk_ids.push(id);
            doc_lengths.push(tokens.len() as u32);
        }
        // HashMap iteration above is unordered; postings are kept by ordinal
        for list in postings.values_mut() {
            list.sort_by_key(|p| p.ordinal);
        }
        let avgdl = if doc_lengths.is_empty() {
            0.0
        } else {
            doc_lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / doc_lengths.len() as f64
        };
        Ok(Self {
            params,
            chunk_ids,
            postings,
            doc_lengths,
            avgdl,
        })
    }

    /// Tokenizes `(chunk_id, text)` pairs and builds the index.
    pub fn build<'a, I>(docs: I, params: Bm25Params, exec: Exec) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let docs: Vec<(&str, &str)> = docs.into_iter().collect();
        let tokenized = par::map_slice(exec, &docs, |(id, text)| (id.to_string(), tokenize(text)));
        Self::from_tokens(tokenized, params)
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn n_docs(&self) -> usize {
        self.chunk_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn chunk_id(&self, ordinal: usize) -> &str {
        &self.chunk_ids[ordinal]
    }

    pub fn doc_length(&self, ordinal: usize) -> u32 {
        self.doc_lengths[ordinal]
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    /// Scores by corpus ordinal, ascending ordinal, matching chunks only.
    pub fn score_ordinals(&self, query_tokens: &[String]) -> Vec<(usize, f64)> {
        if query_tokens.is_empty() || self.chunk_ids.is_empty() {
            return Vec::new();
        }
        let n = self.chunk_ids.len();
        let Bm25Params { k1, b } = self.params;
        let mut scores = vec![0.0f64; n];
        let mut touched = vec![false; n];
        for term in query_tokens {
            let list = self.postings(term);
            if list.is_empty() {
                continue;
            }
            let w = idf(n, list.len());
            for p in list {
                let i = p.ordinal as usize;
                let tf = f64::from(p.tf);
                let dl = f64::from(self.doc_lengths[i]);
                let norm = 1.0 - b + b * dl / self.avgdl;
                scores[i] += w * tf * (k1 + 1.0) / (tf + k1 * norm);
                touched[i] = true;
            }
        }
        (0..n).filter(|&i| touched[i]).map(|i| (i, scores[i])).collect()
    }

    /// `chunk_id -> score` for every chunk matching at least one token.
    pub fn bm25_scores(&self, query_tokens: &[String]) -> BTreeMap<String, f64> {
        self.score_ordinals(query_tokens)
            .into_iter()
            .map(|(i, s)| (self.chunk_ids[i].clone(), s))
            .collect()
    }
}
