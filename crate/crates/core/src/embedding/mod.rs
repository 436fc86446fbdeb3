//! Dense-vector contract: the [`EmbeddingVector`] type, cosine similarity,
//! and the [`Embedder`] providers (HTTP client and a deterministic offline
//! embedder for tests and desk runs).
//!
//! Provider outputs are rounded to `f32` precision on arrival so that the
//! in-memory vectors and the little-endian `f32` snapshot block hold exactly
//! the same values.

mod deterministic;
mod http;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Exec;

pub use deterministic::DeterministicEmbedder;
pub use http::HttpEmbedder;

pub const DEFAULT_DIM: usize = 384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Fails if any entry is non-finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite vector entry at index {i}")));
        }
        Ok(Self { values })
    }

    /// Builds a vector from `f32` data (always finite-checked).
    pub fn from_f32(values: &[f32]) -> Result<Self> {
        Self::new(values.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().map(|&v| v as f32).collect()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Rounds every entry to the nearest `f32`.
    pub(crate) fn quantized(values: Vec<f64>) -> Result<Self> {
        Self::new(values.into_iter().map(|v| f64::from(v as f32)).collect())
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `dot(u, v) / (|u| |v|)` with precomputed norms.
pub(crate) fn cosine_with_norms(u: &EmbeddingVector, nu: f64, v: &EmbeddingVector, nv: f64) -> f64 {
    (dot(&u.values, &v.values) / (nu * nv)).clamp(-1.0, 1.0)
}

/// Cosine similarity. Errors on dimension mismatch or a zero vector.
pub fn cosine_sim(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::Domain(format!("dimension mismatch: {} vs {}", u.dim(), v.dim())));
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine of a zero vector is undefined".into()));
    }
    Ok(cosine_with_norms(u, nu, v, nv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Http,
    DeterministicTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub provider: ProviderKind,
    pub endpoint_url: Option<String>,
    pub model_name: String,
    pub dim: usize,
    pub batch_size: usize,
    pub timeout_ms: u64,
    /// Retries after the first attempt on timeouts, transport errors and 5xx.
    pub max_retries: u32,
    /// First backoff delay; doubles on every retry.
    pub backoff_ms: u64,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            provider: ProviderKind::DeterministicTest,
            endpoint_url: None,
            model_name: "sentence-transformers/all-MiniLM-L6-v2".into(),
            dim: DEFAULT_DIM,
            batch_size: 32,
            timeout_ms: 30_000,
            max_retries: 3,
            backoff_ms: 250,
        }
    }
}

impl EmbedderConfig {
    pub fn deterministic(dim: usize) -> Self {
        Self {
            provider: ProviderKind::DeterministicTest,
            model_name: DeterministicEmbedder::MODEL_NAME.into(),
            dim,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dim must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.provider == ProviderKind::Http && self.endpoint_url.is_none() {
            return Err(Error::Config("http embedder requires endpoint_url".into()));
        }
        Ok(())
    }
}

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    /// One vector per input, in input order.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>>;

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector> {
        self.embed_batch(&[text])?
            .pop()
            .ok_or_else(|| Error::ContractViolation("provider returned no vector".into()))
    }
}

pub(crate) fn check_inputs(texts: &[&str]) -> Result<()> {
    if texts.is_empty() {
        return Err(Error::Domain("embed_batch needs at least one text".into()));
    }
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(Error::Domain(format!("text {i} is empty")));
    }
    Ok(())
}

pub fn build_embedder(config: &EmbedderConfig, exec: Exec) -> Result<Box<dyn Embedder>> {
    config.validate()?;
    Ok(match config.provider {
        ProviderKind::DeterministicTest => Box::new(DeterministicEmbedder::new(config.dim, exec)),
        ProviderKind::Http => Box::new(HttpEmbedder::new(config.clone())?),
    })
}

pub fn embed_batch(texts: &[&str], config: &EmbedderConfig) -> Result<Vec<EmbeddingVector>> {
    build_embedder(config, Exec::default())?.embed_batch(texts)
}
