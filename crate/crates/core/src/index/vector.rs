use std::collections::HashSet;

use crate::embedding::{cosine_with_norms, EmbeddingVector};
use crate::error::{Error, Result};
use crate::par::{self, Exec};

/// Exact (brute-force) dense-vector store in corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<EmbeddingVector>,
    norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorHit {
    pub ordinal: usize,
    pub chunk_id: String,
    pub cosine: f64,
    /// Zero-indexed position in the full ranking.
    pub rank: usize,
}

impl VectorIndex {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ids: Vec::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
        }
    }

    pub fn from_entries(dim: usize, entries: Vec<(String, EmbeddingVector)>) -> Result<Self> {
        let mut index = Self::new(dim);
        let mut seen = HashSet::with_capacity(entries.len());
        for (id, v) in entries {
            if !seen.insert(id.clone()) {
                return Err(Error::Domain(format!("duplicate chunk id {id}")));
            }
            index.push(id, v)?;
        }
        Ok(index)
    }

    fn push(&mut self, id: String, v: EmbeddingVector) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::Domain(format!(
                "vector for {id} has dim {}, index dim is {}",
                v.dim(),
                self.dim
            )));
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::Domain(format!("vector for {id} is all zeros")));
        }
        self.ids.push(id);
        self.vectors.push(v);
        self.norms.push(norm);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn chunk_id(&self, ordinal: usize) -> &str {
        &self.ids[ordinal]
    }

    pub fn vector(&self, ordinal: usize) -> &EmbeddingVector {
        &self.vectors[ordinal]
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &EmbeddingVector)> {
        self.ids.iter().map(String::as_str).zip(&self.vectors)
    }

    /// Cosine against every entry, sorted descending, ties by chunk id.
    pub fn vector_ranking(&self, query: &EmbeddingVector, exec: Exec) -> Result<Vec<VectorHit>> {
        if query.dim() != self.dim {
            return Err(Error::Domain(format!(
                "query dim {} does not match index dim {}",
                query.dim(),
                self.dim
            )));
        }
        let qn = query.norm();
        if qn == 0.0 {
            return Err(Error::Domain("query vector is all zeros".into()));
        }
        let ordinals: Vec<usize> = (0..self.len()).collect();
        let cosines = par::map_slice(exec, &ordinals, |&i| {
            cosine_with_norms(query, qn, &self.vectors[i], self.norms[i])
        });
        let mut order = ordinals;
        order.sort_by(|&a, &b| {
            cosines[b]
                .total_cmp(&cosines[a])
                .then_with(|| self.ids[a].cmp(&self.ids[b]))
        });
        Ok(order
            .into_iter()
            .enumerate()
            .map(|(rank, i)| VectorHit {
                ordinal: i,
                chunk_id: self.ids[i].clone(),
                cosine: cosines[i],
                rank,
            })
            .collect())
    }
}
