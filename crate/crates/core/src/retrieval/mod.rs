//! Query-time pipelines.
//!
//! * [`retrieve_semantic`]: top `candidate_n` chunks by cosine, then MMR
//!   down to `k`.
//! * [`retrieve_hybrid`]: BM25 over the tokenized query fused with the full
//!   vector ranking (see [`fusion`]), top `k`.

pub mod fusion;
pub mod mmr;
pub mod prompt;

use serde::{Deserialize, Serialize};

use crate::chunker::Span;
use crate::embedding::{Embedder, EmbeddingVector};
use crate::error::{Error, Result};
use crate::index::{tokenize, IndexedCorpus};
use crate::par::Exec;

pub use fusion::{fuse_hybrid, FusedEntry};
pub use mmr::{mmr_select, mmr_select_by_similarity};
pub use prompt::{assemble_prompt, AssembledPrompt, TemplateRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Semantic,
    Hybrid,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semantic" => Ok(Mode::Semantic),
            "hybrid" => Ok(Mode::Hybrid),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}, expected semantic or hybrid"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub mode: Mode,
    pub k: usize,
    #[serde(rename = "candidate_N")]
    pub candidate_n: usize,
    pub lambda: f64,
    pub alpha: f64,
    #[serde(rename = "lexical_batch_M")]
    pub lexical_batch_m: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Hybrid,
            k: 5,
            candidate_n: 24,
            lambda: 0.5,
            alpha: 0.5,
            lexical_batch_m: 24,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.mode == Mode::Semantic && self.k > self.candidate_n {
            return Err(Error::Config(format!(
                "k ({}) must not exceed candidate_N ({}) in semantic mode",
                self.k, self.candidate_n
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must be in [0, 1], got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        if self.lexical_batch_m == 0 {
            return Err(Error::Config("lexical_batch_M must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHit {
    pub chunk_id: String,
    pub cosine: f64,
    pub vector_rank: usize,
    pub bm25_raw: f64,
    pub bm25_norm: f64,
    pub fused: f64,
    pub path: String,
    pub span: Span,
    pub text: String,
}

impl ScoredHit {
    /// Ranking score for the mode that produced the hit.
    pub fn score(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Semantic => self.cosine,
            Mode::Hybrid => self.fused,
        }
    }
}

/// Hit as exposed on the wire (CLI `--json` and the JSON-RPC server).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub chunk_id: String,
    pub path: String,
    pub span: Span,
    pub score: f64,
    pub text: String,
}

impl HitRecord {
    pub fn from_hit(hit: &ScoredHit, mode: Mode) -> Self {
        Self {
            chunk_id: hit.chunk_id.clone(),
            path: hit.path.clone(),
            span: hit.span,
            score: hit.score(mode),
            text: hit.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieveResult {
    pub hits: Vec<HitRecord>,
}

impl RetrieveResult {
    pub fn new(hits: &[ScoredHit], mode: Mode) -> Self {
        Self {
            hits: hits.iter().map(|h| HitRecord::from_hit(h, mode)).collect(),
        }
    }
}

fn hit_for(corpus: &IndexedCorpus, ordinal: usize) -> ScoredHit {
    let c = &corpus.chunks()[ordinal];
    ScoredHit {
        chunk_id: c.chunk_id.clone(),
        cosine: 0.0,
        vector_rank: 0,
        bm25_raw: 0.0,
        bm25_norm: 0.0,
        fused: 0.0,
        path: c.path.clone(),
        span: c.span,
        text: c.text.clone(),
    }
}

/// Semantic retrieval with a precomputed query vector.
pub fn semantic_with_vector(
    query_vec: &EmbeddingVector,
    config: &RetrievalConfig,
    corpus: &IndexedCorpus,
    exec: Exec,
) -> Result<Vec<ScoredHit>> {
    config.validate()?;
    if corpus.is_empty() {
        return Ok(Vec::new());
    }
    let ranking = corpus.vectors().vector_ranking(query_vec, exec)?;
    let pool = &ranking[..config.candidate_n.min(ranking.len())];
    let candidates: Vec<(String, EmbeddingVector)> = pool
        .iter()
        .map(|h| (h.chunk_id.clone(), corpus.vectors().vector(h.ordinal).clone()))
        .collect();
    let k = config.k.min(candidates.len());
    let picked = mmr_select(query_vec, &candidates, config.lambda, k)?;
    Ok(picked
        .iter()
        .map(|id| {
            let h = pool.iter().find(|h| &h.chunk_id == id).expect("picked from pool");
            ScoredHit {
                cosine: h.cosine,
                vector_rank: h.rank,
                ..hit_for(corpus, h.ordinal)
            }
        })
        .collect())
}

/// Hybrid retrieval with precomputed query tokens and vector.
pub fn hybrid_with_vector(
    query_tokens: &[String],
    query_vec: &EmbeddingVector,
    config: &RetrievalConfig,
    corpus: &IndexedCorpus,
    exec: Exec,
) -> Result<Vec<ScoredHit>> {
    config.validate()?;
    if corpus.is_empty() {
        return Ok(Vec::new());
    }
    let bm25 = corpus.lexical().bm25_scores(query_tokens);
    let ranking = corpus.vectors().vector_ranking(query_vec, exec)?;
    let fused = fuse_hybrid(&bm25, &ranking, config.alpha, config.lexical_batch_m);
    Ok(fused
        .into_iter()
        .take(config.k)
        .map(|e| ScoredHit {
            cosine: e.cosine,
            vector_rank: e.vector_rank,
            bm25_raw: e.bm25_raw,
            bm25_norm: e.bm25_norm,
            fused: e.fused,
            ..hit_for(corpus, e.ordinal)
        })
        .collect())
}

pub fn retrieve_semantic(
    query: &str,
    config: &RetrievalConfig,
    corpus: &IndexedCorpus,
    embedder: &dyn Embedder,
    exec: Exec,
) -> Result<Vec<ScoredHit>> {
    config.validate()?;
    if corpus.is_empty() {
        return Ok(Vec::new());
    }
    let q = embedder.embed_one(query)?;
    semantic_with_vector(&q, config, corpus, exec)
}

pub fn retrieve_hybrid(
    query: &str,
    config: &RetrievalConfig,
    corpus: &IndexedCorpus,
    embedder: &dyn Embedder,
    exec: Exec,
) -> Result<Vec<ScoredHit>> {
    config.validate()?;
    if corpus.is_empty() {
        return Ok(Vec::new());
    }
    let q = embedder.embed_one(query)?;
    hybrid_with_vector(&tokenize(query), &q, config, corpus, exec)
}

/// Dispatches on `config.mode`.
pub fn retrieve(
    query: &str,
    config: &RetrievalConfig,
    corpus: &IndexedCorpus,
    embedder: &dyn Embedder,
    exec: Exec,
) -> Result<Vec<ScoredHit>> {
    match config.mode {
        Mode::Semantic => retrieve_semantic(query, config, corpus, embedder, exec),
        Mode::Hybrid => retrieve_hybrid(query, config, corpus, embedder, exec),
    }
}
