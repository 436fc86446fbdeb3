//! On-disk index snapshot.
//!
//! A snapshot directory holds three files:
//!
//! * `manifest.json`: format version, embedder identity, chunk policy, BM25
//!   parameters, retrieval defaults and corpus counts.
//! * `chunks.jsonl`: one chunk record per line.
//! * `vectors.bin`: little-endian `f32`, row-major, rows in `chunks.jsonl`
//!   order, `n_chunks * embed_dim * 4` bytes.
//!
//! The BM25 index is not stored; it is rebuilt from chunk text on load.
//! Saving writes a sibling temp directory and renames it into place.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::chunker::{Chunk, ChunkPolicy};
use crate::embedding::{build_embedder, EmbedderConfig, EmbeddingVector, ProviderKind};
use crate::engine::{BuildConfig, Engine};
use crate::error::{Error, Result};
use crate::index::Bm25Params;
use crate::par::Exec;
use crate::retrieval::RetrievalConfig;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHUNKS_FILE: &str = "chunks.jsonl";
pub const VECTORS_FILE: &str = "vectors.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub n_chunks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub embed_dim: usize,
    pub embed_provider: ProviderKind,
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed_endpoint: Option<String>,
    pub chunk_policy: ChunkPolicy,
    pub bm25: Bm25Params,
    pub retrieval: RetrievalConfig,
    pub corpus: CorpusStats,
    pub repo_rev: Option<String>,
}

impl Manifest {
    pub fn of(engine: &Engine) -> Self {
        let cfg = engine.config();
        Self {
            format_version: FORMAT_VERSION,
            embed_dim: cfg.embedder.dim,
            embed_provider: cfg.embedder.provider,
            model_name: cfg.embedder.model_name.clone(),
            embed_endpoint: cfg.embedder.endpoint_url.clone(),
            chunk_policy: cfg.chunking.clone(),
            bm25: cfg.bm25,
            retrieval: cfg.retrieval,
            corpus: CorpusStats {
                n_docs: engine.n_docs(),
                n_chunks: engine.corpus().len(),
            },
            repo_rev: engine.repo_rev().map(String::from),
        }
    }
}

fn snap_err(msg: impl Into<String>) -> Error {
    Error::Snapshot(msg.into())
}

fn unique_sibling(dir: &Path, tag: &str) -> Result<PathBuf> {
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| snap_err(format!("snapshot path {} has no file name", dir.display())))?;
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or_default();
    let parent = dir
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    Ok(parent.join(format!(".{name}.{tag}-{}-{nanos}", std::process::id())))
}

fn write_files(engine: &Engine, dir: &Path) -> Result<()> {
    let manifest = serde_json::to_string_pretty(&Manifest::of(engine))?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest + "\n").map_err(|e| Error::io(&path, e))?;

    let path = dir.join(CHUNKS_FILE);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut out = BufWriter::new(file);
    for chunk in engine.corpus().chunks() {
        serde_json::to_writer(&mut out, chunk)?;
        out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(VECTORS_FILE);
    let vectors = engine.corpus().vectors();
    let mut block = Vec::with_capacity(vectors.len() * vectors.dim() * 4);
    for (_, v) in vectors.entries() {
        for x in v.to_f32() {
            block.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(&path, block).map_err(|e| Error::io(&path, e))
}

/// Writes the snapshot to `dir`, replacing any previous snapshot there.
/// On failure nothing is left at `dir` that was not there before.
pub fn save_snapshot(engine: &Engine, dir: &Path) -> Result<()> {
    let tmp = unique_sibling(dir, "tmp")?;
    if let Some(parent) = tmp.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::create_dir(&tmp).map_err(|e| Error::io(&tmp, e))?;
    if let Err(e) = write_files(engine, &tmp) {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }

    let old = if dir.exists() {
        let old = unique_sibling(dir, "old")?;
        if let Err(e) = fs::rename(dir, &old) {
            let _ = fs::remove_dir_all(&tmp);
            return Err(Error::io(dir, e));
        }
        Some(old)
    } else {
        None
    };
    if let Err(e) = fs::rename(&tmp, dir) {
        if let Some(old) = &old {
            let _ = fs::rename(old, dir);
        }
        let _ = fs::remove_dir_all(&tmp);
        return Err(Error::io(dir, e));
    }
    if let Some(old) = old {
        if let Err(e) = fs::remove_dir_all(&old) {
            log::warn!("could not remove previous snapshot {}: {e}", old.display());
        }
    }
    Ok(())
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let raw = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let version: serde_json::Value =
        serde_json::from_str(&raw).map_err(|e| snap_err(format!("manifest.json is not valid JSON: {e}")))?;
    match version.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(v) => {
            return Err(snap_err(format!(
                "unsupported format_version {v} (supported: {FORMAT_VERSION})"
            )))
        }
        None => return Err(snap_err("manifest.json lacks format_version")),
    }
    serde_json::from_value(version).map_err(|e| snap_err(format!("corrupt manifest.json: {e}")))
}

fn load_chunks(dir: &Path) -> Result<Vec<Chunk>> {
    let path = dir.join(CHUNKS_FILE);
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut chunks = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        let chunk = serde_json::from_str(&line).map_err(|e| snap_err(format!("chunks.jsonl line {}: {e}", i + 1)))?;
        chunks.push(chunk);
    }
    Ok(chunks)
}

fn load_vectors(dir: &Path, n_chunks: usize, dim: usize) -> Result<Vec<EmbeddingVector>> {
    let path = dir.join(VECTORS_FILE);
    let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let expected = n_chunks * dim * 4;
    if raw.len() != expected {
        return Err(snap_err(format!(
            "vector block size mismatch: {} bytes, expected {expected} ({n_chunks} x {dim} x 4)",
            raw.len()
        )));
    }
    if dim == 0 {
        return Ok(Vec::new());
    }
    raw.chunks_exact(dim * 4)
        .enumerate()
        .map(|(row, bytes)| {
            let floats: Vec<f32> = bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            EmbeddingVector::from_f32(&floats).map_err(|e| snap_err(format!("vectors.bin row {row}: {e}")))
        })
        .collect()
}

/// Loads and validates a snapshot. `endpoint_override` replaces the stored
/// HTTP embedder endpoint used for query embedding.
pub fn load_snapshot(dir: &Path, endpoint_override: Option<&str>, exec: Exec) -> Result<Engine> {
    let manifest = load_manifest(dir)?;
    let chunks = load_chunks(dir)?;
    if chunks.len() != manifest.corpus.n_chunks {
        return Err(snap_err(format!(
            "chunk count mismatch: manifest n_chunks is {}, chunks.jsonl has {}",
            manifest.corpus.n_chunks,
            chunks.len()
        )));
    }
    let vectors = load_vectors(dir, chunks.len(), manifest.embed_dim)?;

    let mut embedder = match manifest.embed_provider {
        ProviderKind::DeterministicTest => EmbedderConfig::deterministic(manifest.embed_dim),
        ProviderKind::Http => EmbedderConfig {
            provider: ProviderKind::Http,
            dim: manifest.embed_dim,
            ..EmbedderConfig::default()
        },
    };
    embedder.model_name = manifest.model_name.clone();
    embedder.endpoint_url = endpoint_override
        .map(String::from)
        .or_else(|| manifest.embed_endpoint.clone());

    let config = BuildConfig {
        chunking: manifest.chunk_policy.clone(),
        embedder,
        bm25: manifest.bm25,
        retrieval: manifest.retrieval,
        ..BuildConfig::default()
    };
    config.chunking.validate()?;
    config.bm25.validate()?;
    config.retrieval.validate()?;
    let provider = build_embedder(&config.embedder, exec)?;
    let engine = Engine::from_parts(config, chunks, vectors, provider, manifest.repo_rev.clone(), exec)
        .map_err(|e| snap_err(format!("inconsistent snapshot: {e}")))?;
    if engine.n_docs() != manifest.corpus.n_docs {
        return Err(snap_err(format!(
            "document count mismatch: manifest n_docs is {}, chunks.jsonl has {}",
            manifest.corpus.n_docs,
            engine.n_docs()
        )));
    }
    Ok(engine)
}
