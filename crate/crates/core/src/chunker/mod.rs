//! Document segmentation.
//!
//! Two modes are available per [`DocKind`]:
//!
//! * **fixed**: a sliding character window with overlap
//!   ([`chunk_fixed`]); used for prose and as the fallback for code.
//! * **structural**: a declaration-aware splitter for code
//!   ([`split_code_structure`]) that keeps a class signature, docstring and
//!   constructor together and emits each remaining method and each
//!   module-level function as its own chunk.
//!
//! All offsets are Unicode scalar (char) offsets into the parent content,
//! half-open. Every chunk's `text` is exactly the parent slice at its span.

mod structure;
mod text;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{DocKind, Document};
use crate::par::{self, Exec};

pub use structure::split_code_structure;
pub(crate) use text::CharMap;

/// Half-open `[start, end)` char range. Serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Self { start, end }
    }
}

impl From<Span> for (usize, usize) {
    fn from(s: Span) -> Self {
        (s.start, s.end)
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralKind {
    Window,
    ClassHeader,
    Method,
    Function,
    DocSection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkMeta {
    pub structural_kind: StructuralKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_symbol: Option<String>,
    pub source_kind: DocKind,
}

impl ChunkMeta {
    pub fn window(source_kind: DocKind) -> Self {
        Self {
            structural_kind: StructuralKind::Window,
            symbol_name: None,
            parent_symbol: None,
            source_kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    /// `doc_id#ordinal`, ordinals in span order.
    pub chunk_id: String,
    pub doc_id: String,
    pub path: String,
    pub span: Span,
    pub meta: ChunkMeta,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkMode {
    Fixed,
    Structural,
}

/// Window parameters for one document kind. For structural kinds the
/// window/overlap pair is the fixed-mode fallback used for top-level
/// statements and oversized declarations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindPolicy {
    pub window_chars: usize,
    pub overlap_chars: usize,
    pub mode: ChunkMode,
}

impl KindPolicy {
    pub const fn fixed(window_chars: usize, overlap_chars: usize) -> Self {
        Self {
            window_chars,
            overlap_chars,
            mode: ChunkMode::Fixed,
        }
    }

    pub const fn structural(window_chars: usize, overlap_chars: usize) -> Self {
        Self {
            window_chars,
            overlap_chars,
            mode: ChunkMode::Structural,
        }
    }
}

pub const DOC_WINDOW: usize = 800;
pub const DOC_OVERLAP: usize = 160;
pub const CODE_FALLBACK_WINDOW: usize = 1200;
pub const CODE_FALLBACK_OVERLAP: usize = 240;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPolicy {
    pub kinds: BTreeMap<DocKind, KindPolicy>,
}

impl Default for ChunkPolicy {
    fn default() -> Self {
        let code = KindPolicy::structural(CODE_FALLBACK_WINDOW, CODE_FALLBACK_OVERLAP);
        let doc = KindPolicy::fixed(DOC_WINDOW, DOC_OVERLAP);
        let kinds = DocKind::ALL
            .into_iter()
            .map(|k| (k, if k.is_code() { code } else { doc }))
            .collect();
        Self { kinds }
    }
}

impl ChunkPolicy {
    pub fn validate(&self) -> Result<()> {
        for (kind, p) in &self.kinds {
            if p.overlap_chars >= p.window_chars {
                return Err(Error::Config(format!(
                    "chunk policy for {kind:?}: overlap {} must be < window {}",
                    p.overlap_chars, p.window_chars
                )));
            }
            if p.mode == ChunkMode::Structural && !kind.is_code() {
                return Err(Error::Config(format!(
                    "structural mode is only available for code kinds, not {kind:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn for_kind(&self, kind: DocKind) -> KindPolicy {
        self.kinds.get(&kind).copied().unwrap_or_else(|| {
            if kind.is_code() {
                KindPolicy::structural(CODE_FALLBACK_WINDOW, CODE_FALLBACK_OVERLAP)
            } else {
                KindPolicy::fixed(DOC_WINDOW, DOC_OVERLAP)
            }
        })
    }
}

/// Window spans over `[0, len)` with stride `window - overlap`. The last
/// window may be shorter; `len == 0` yields nothing.
pub(crate) fn window_spans(len: usize, window: usize, overlap: usize) -> Result<Vec<Span>> {
    if overlap >= window {
        return Err(Error::Config(format!(
            "overlap {overlap} must be smaller than window {window}"
        )));
    }
    let stride = window - overlap;
    let mut spans = Vec::new();
    if len == 0 {
        return Ok(spans);
    }
    let mut start = 0;
    loop {
        let end = (start + window).min(len);
        spans.push(Span::new(start, end));
        if end == len {
            break;
        }
        start += stride;
    }
    Ok(spans)
}

/// Orders chunks by span and assigns `doc_id#ordinal` identifiers.
pub(crate) fn finalize(doc: &Document, map: &CharMap<'_>, mut pieces: Vec<(Span, ChunkMeta)>) -> Vec<Chunk> {
    pieces.sort_by_key(|(span, _)| (span.start, span.end));
    pieces
        .into_iter()
        .enumerate()
        .map(|(ordinal, (span, meta))| Chunk {
            chunk_id: format!("{}#{ordinal}", doc.doc_id),
            doc_id: doc.doc_id.clone(),
            path: doc.path.clone(),
            text: map.slice(span).to_string(),
            span,
            meta,
        })
        .collect()
}

/// Sliding-window segmentation of a whole document.
pub fn chunk_fixed(doc: &Document, window: usize, overlap: usize) -> Result<Vec<Chunk>> {
    let map = CharMap::new(&doc.content);
    let pieces = window_spans(map.char_len(), window, overlap)?
        .into_iter()
        .map(|s| (s, ChunkMeta::window(doc.kind)))
        .collect();
    Ok(finalize(doc, &map, pieces))
}

/// Chunks one document according to the policy entry for its kind.
pub fn chunk_document(doc: &Document, policy: &ChunkPolicy) -> Result<Vec<Chunk>> {
    let p = policy.for_kind(doc.kind);
    match p.mode {
        ChunkMode::Structural if doc.kind.is_code() => {
            structure::split_with_fallback(doc, p.window_chars, p.overlap_chars)
        }
        _ => chunk_fixed(doc, p.window_chars, p.overlap_chars),
    }
}

/// Chunks a corpus, preserving document order.
pub fn chunk_corpus(docs: &[Document], policy: &ChunkPolicy, exec: Exec) -> Result<Vec<Chunk>> {
    policy.validate()?;
    let per_doc = par::map_slice(exec, docs, |d| chunk_document(d, policy));
    let mut out = Vec::new();
    for chunks in per_doc {
        out.extend(chunks?);
    }
    Ok(out)
}
