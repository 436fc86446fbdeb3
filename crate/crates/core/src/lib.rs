//! Retrieval-augmented generation engine for software repositories.
//!
//! The pipeline runs in two phases:
//!
//! * **ingestion**: [`ingest::scan_repository`] turns a repository tree into
//!   [`ingest::Document`]s, [`chunker`] splits them into [`chunker::Chunk`]s
//!   (sliding windows for prose, declaration-aware splitting for code),
//!   [`embedding`] maps chunk text to dense vectors, and [`index`] builds an
//!   exact vector store plus an Okapi BM25 inverted index.
//! * **query**: [`retrieval`] serves either semantic retrieval (cosine
//!   candidates reranked with maximal marginal relevance) or hybrid
//!   retrieval (max-normalized BM25 fused with a linear vector-rank score),
//!   and assembles the hits into a generation prompt.
//!
//! [`engine::Engine`] ties the stages together, [`snapshot`] persists it,
//! [`server`] exposes it over line-delimited JSON-RPC, and [`eval`] scores
//! generated-code execution transcripts against precomputed ground truth.

pub mod chunker;
pub mod embedding;
pub mod engine;
pub mod error;
pub mod eval;
pub mod index;
pub mod ingest;
pub mod par;
pub mod retrieval;
pub mod server;
pub mod snapshot;

pub use error::{Error, Result};
pub use par::Exec;
