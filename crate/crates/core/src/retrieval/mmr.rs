//! Maximal marginal relevance selection.
//!
//! Greedy: at each step pick the remaining candidate maximizing
//! `lambda * sim(d, q) - (1 - lambda) * max_{s in S} sim(d, s)`, with the
//! max over an empty selection taken as 0. Ties go to the smaller chunk id.

use crate::embedding::{cosine_with_norms, EmbeddingVector};
use crate::error::{Error, Result};

fn check(n: usize, lambda: f64, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("MMR needs at least one candidate".into()));
    }
    if k == 0 || k > n {
        return Err(Error::Config(format!("MMR k must be in 1..={n}, got {k}")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("lambda must be in [0, 1], got {lambda}")));
    }
    Ok(())
}

/// MMR over precomputed similarities. `sim(i, j)` is the candidate-candidate
/// similarity. Returns candidate indices in selection order.
pub fn mmr_select_by_similarity<F>(
    ids: &[&str],
    query_sims: &[f64],
    sim: F,
    lambda: f64,
    k: usize,
) -> Result<Vec<usize>>
where
    F: Fn(usize, usize) -> f64,
{
    let n = ids.len();
    check(n, lambda, k)?;
    if query_sims.len() != n {
        return Err(Error::Domain(format!(
            "{n} candidates but {} query similarities",
            query_sims.len()
        )));
    }

    let mut selected = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    // running max similarity to the selected set; meaningless until one pick
    let mut redundancy = vec![f64::NEG_INFINITY; n];

    while selected.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            let red = if selected.is_empty() { 0.0 } else { redundancy[i] };
            let score = lambda * query_sims[i] - (1.0 - lambda) * red;
            let better = match best {
                None => true,
                Some((b, bs)) => score > bs || (score == bs && ids[i] < ids[b]),
            };
            if better {
                best = Some((i, score));
            }
        }
        let (pick, _) = best.expect("k <= n guarantees a remaining candidate");
        taken[pick] = true;
        selected.push(pick);
        for i in (0..n).filter(|&i| !taken[i]) {
            redundancy[i] = redundancy[i].max(sim(i, pick));
        }
    }
    Ok(selected)
}

/// MMR over embedding vectors with cosine similarity. Returns chunk ids in
/// selection order.
pub fn mmr_select(
    query: &EmbeddingVector,
    candidates: &[(String, EmbeddingVector)],
    lambda: f64,
    k: usize,
) -> Result<Vec<String>> {
    check(candidates.len(), lambda, k)?;
    let qn = query.norm();
    let norms: Vec<f64> = candidates.iter().map(|(_, v)| v.norm()).collect();
    if qn == 0.0 || norms.contains(&0.0) {
        return Err(Error::Domain("MMR over a zero vector".into()));
    }
    if let Some((id, v)) = candidates.iter().find(|(_, v)| v.dim() != query.dim()) {
        return Err(Error::Domain(format!(
            "candidate {id} has dim {}, query has {}",
            v.dim(),
            query.dim()
        )));
    }
    let ids: Vec<&str> = candidates.iter().map(|(id, _)| id.as_str()).collect();
    let query_sims: Vec<f64> = candidates
        .iter()
        .zip(&norms)
        .map(|((_, v), &n)| cosine_with_norms(v, n, query, qn))
        .collect();
    let sim = |i: usize, j: usize| cosine_with_norms(&candidates[i].1, norms[i], &candidates[j].1, norms[j]);
    let picks = mmr_select_by_similarity(&ids, &query_sims, sim, lambda, k)?;
    Ok(picks.into_iter().map(|i| ids[i].to_string()).collect())
}
