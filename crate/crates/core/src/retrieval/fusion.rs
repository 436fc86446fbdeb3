//! Rank-aware normalized fusion of BM25 and dense-vector rankings.
//!
//! ```text
//! fused = alpha * bm25 / max(bm25 over lexical batch) + (1 - alpha) * (1 - rank / N)
//! ```
//!
//! The candidate set is the union of the top `batch_m` chunks by BM25 and
//! the top `batch_m` chunks by vector rank. Chunks outside the lexical batch,
//! or any chunk when the batch maximum is 0, get a lexical term of 0.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::index::VectorHit;

#[derive(Debug, Clone, PartialEq)]
pub struct FusedEntry {
    pub ordinal: usize,
    pub chunk_id: String,
    pub cosine: f64,
    pub vector_rank: usize,
    pub bm25_raw: f64,
    pub bm25_norm: f64,
    pub fused: f64,
}

pub fn fused_score(alpha: f64, bm25_norm: f64, rank: usize, n_total: usize) -> f64 {
    alpha * bm25_norm + (1.0 - alpha) * (1.0 - rank as f64 / n_total as f64)
}

/// Top `m` of a BM25 map by descending score, ties by chunk id.
pub fn lexical_batch(bm25: &BTreeMap<String, f64>, m: usize) -> Vec<(&str, f64)> {
    let mut all: Vec<(&str, f64)> = bm25.iter().map(|(k, &v)| (k.as_str(), v)).collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    all.truncate(m);
    all
}

/// Fuses a BM25 map with the full vector ranking (`vranks` must cover every
/// chunk, so `N = vranks.len()`). Result sorted by fused score descending,
/// ties by chunk id.
pub fn fuse_hybrid(bm25: &BTreeMap<String, f64>, vranks: &[VectorHit], alpha: f64, batch_m: usize) -> Vec<FusedEntry> {
    let n_total = vranks.len();
    if n_total == 0 {
        return Vec::new();
    }
    let by_id: HashMap<&str, &VectorHit> = vranks.iter().map(|h| (h.chunk_id.as_str(), h)).collect();

    let lexical = lexical_batch(bm25, batch_m);
    let batch_max = lexical.first().map_or(0.0, |&(_, s)| s);
    let in_lexical: BTreeSet<&str> = lexical.iter().map(|&(id, _)| id).collect();

    let mut candidates: BTreeSet<&str> = in_lexical.clone();
    candidates.extend(vranks.iter().take(batch_m).map(|h| h.chunk_id.as_str()));

    let mut out: Vec<FusedEntry> = candidates
        .into_iter()
        .filter_map(|id| {
            let Some(hit) = by_id.get(id) else {
                debug_assert!(false, "bm25 chunk {id} missing from the vector ranking");
                return None;
            };
            let bm25_raw = bm25.get(id).copied().unwrap_or(0.0);
            let bm25_norm = if batch_max > 0.0 && in_lexical.contains(id) {
                bm25_raw / batch_max
            } else {
                0.0
            };
            Some(FusedEntry {
                ordinal: hit.ordinal,
                chunk_id: id.to_string(),
                cosine: hit.cosine,
                vector_rank: hit.rank,
                bm25_raw,
                bm25_norm,
                fused: fused_score(alpha, bm25_norm, hit.rank, n_total),
            })
        })
        .collect();
    out.sort_by(|a, b| b.fused.total_cmp(&a.fused).then_with(|| a.chunk_id.cmp(&b.chunk_id)));
    out
}
