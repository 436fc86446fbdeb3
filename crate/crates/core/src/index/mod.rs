//! Retrieval indexes over a chunk corpus: an exact vector store and a BM25
//! inverted index. Both are built once and then only read.

mod lexical;
mod tokenizer;
mod vector;

pub use lexical::{idf, Bm25Params, LexicalIndex, Posting};
pub use tokenizer::{identifier_parts, tokenize};
pub use vector::{VectorHit, VectorIndex};

use crate::chunker::Chunk;
use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::par::Exec;

/// Chunks plus both indexes, all in the same corpus order.
#[derive(Debug, Clone)]
pub struct IndexedCorpus {
    chunks: Vec<Chunk>,
    vectors: VectorIndex,
    lexical: LexicalIndex,
}

impl IndexedCorpus {
    pub fn build(
        chunks: Vec<Chunk>,
        embeddings: Vec<EmbeddingVector>,
        dim: usize,
        bm25: Bm25Params,
        exec: Exec,
    ) -> Result<Self> {
        if chunks.len() != embeddings.len() {
            return Err(Error::Domain(format!(
                "{} chunks but {} embeddings",
                chunks.len(),
                embeddings.len()
            )));
        }
        let vectors =
            VectorIndex::from_entries(dim, chunks.iter().map(|c| c.chunk_id.clone()).zip(embeddings).collect())?;
        let lexical = LexicalIndex::build(
            chunks.iter().map(|c| (c.chunk_id.as_str(), c.text.as_str())),
            bm25,
            exec,
        )?;
        Ok(Self {
            chunks,
            vectors,
            lexical,
        })
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn vectors(&self) -> &VectorIndex {
        &self.vectors
    }

    pub fn lexical(&self) -> &LexicalIndex {
        &self.lexical
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }
}
