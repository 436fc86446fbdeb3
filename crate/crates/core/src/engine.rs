//! End-to-end engine: ingestion into a frozen [`IndexedCorpus`] plus the
//! query entry points used by the CLI and the server.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chunker::{chunk_corpus, Chunk, ChunkPolicy};
use crate::embedding::{
    build_embedder, DeterministicEmbedder, Embedder, EmbedderConfig, EmbeddingVector, ProviderKind,
};
use crate::error::{Error, Result};
use crate::index::{Bm25Params, IndexedCorpus};
use crate::ingest::{scan_repository_at_rev, Document, IngestConfig, IngestWarning};
use crate::par::Exec;
use crate::retrieval::{self, assemble_prompt, AssembledPrompt, Mode, RetrievalConfig, ScoredHit, TemplateRegistry};

/// Everything needed to build an index. Loadable from TOML or JSON; every
/// section is optional and falls back to its defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub ingest: IngestConfig,
    pub chunking: ChunkPolicy,
    pub embedder: EmbedderConfig,
    pub bm25: Bm25Params,
    pub retrieval: RetrievalConfig,
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        self.ingest.validate()?;
        self.chunking.validate()?;
        self.embedder.validate()?;
        self.bm25.validate()?;
        self.retrieval.validate()
    }
}

/// Per-request overrides on top of the engine's retrieval defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QueryOptions {
    pub mode: Option<Mode>,
    pub k: Option<usize>,
}

pub struct Engine {
    config: BuildConfig,
    corpus: IndexedCorpus,
    embedder: Box<dyn Embedder>,
    repo_rev: Option<String>,
    templates: TemplateRegistry,
    exec: Exec,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("config", &self.config)
            .field("n_chunks", &self.corpus.len())
            .field("repo_rev", &self.repo_rev)
            .field("exec", &self.exec)
            .finish_non_exhaustive()
    }
}

fn normalized(mut config: BuildConfig) -> BuildConfig {
    if config.embedder.provider == ProviderKind::DeterministicTest {
        config.embedder.model_name = DeterministicEmbedder::MODEL_NAME.into();
    }
    config
}

impl Engine {
    /// Scans `root`, then chunks, embeds and indexes the documents.
    pub fn build(
        root: &Path,
        config: BuildConfig,
        repo_rev: Option<&str>,
        exec: Exec,
    ) -> Result<(Self, Vec<IngestWarning>)> {
        config.validate()?;
        let report = scan_repository_at_rev(root, &config.ingest, repo_rev)?;
        for w in &report.warnings {
            log::warn!("skipped {}: {}", w.path, w.reason);
        }
        let engine = Self::from_documents(&report.documents, config, repo_rev, exec)?;
        Ok((engine, report.warnings))
    }

    pub fn from_documents(docs: &[Document], config: BuildConfig, repo_rev: Option<&str>, exec: Exec) -> Result<Self> {
        config.validate()?;
        let config = normalized(config);
        let chunks = chunk_corpus(docs, &config.chunking, exec)?;
        let embedder = build_embedder(&config.embedder, exec)?;
        let embeddings = if chunks.is_empty() {
            Vec::new()
        } else {
            let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
            embedder.embed_batch(&texts)?
        };
        log::info!("indexed {} chunks from {} documents", chunks.len(), docs.len());
        Self::from_parts(config, chunks, embeddings, embedder, repo_rev.map(String::from), exec)
    }

    pub(crate) fn from_parts(
        config: BuildConfig,
        chunks: Vec<Chunk>,
        embeddings: Vec<EmbeddingVector>,
        embedder: Box<dyn Embedder>,
        repo_rev: Option<String>,
        exec: Exec,
    ) -> Result<Self> {
        let corpus = IndexedCorpus::build(chunks, embeddings, config.embedder.dim, config.bm25, exec)?;
        Ok(Self {
            config,
            corpus,
            embedder,
            repo_rev,
            templates: TemplateRegistry::default(),
            exec,
        })
    }

    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn corpus(&self) -> &IndexedCorpus {
        &self.corpus
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    pub fn repo_rev(&self) -> Option<&str> {
        self.repo_rev.as_deref()
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    /// Distinct documents represented in the chunk set.
    pub fn n_docs(&self) -> usize {
        self.corpus
            .chunks()
            .iter()
            .map(|c| c.doc_id.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn templates(&self) -> &TemplateRegistry {
        &self.templates
    }

    pub fn templates_mut(&mut self) -> &mut TemplateRegistry {
        &mut self.templates
    }

    /// Retrieval defaults with the request overrides applied.
    pub fn effective_config(&self, opts: QueryOptions) -> Result<RetrievalConfig> {
        let mut cfg = self.config.retrieval;
        if let Some(mode) = opts.mode {
            cfg.mode = mode;
        }
        if let Some(k) = opts.k {
            cfg.k = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn retrieve_with(&self, query: &str, config: &RetrievalConfig) -> Result<Vec<ScoredHit>> {
        if query.trim().is_empty() {
            return Err(Error::Config("query must not be empty".into()));
        }
        retrieval::retrieve(query, config, &self.corpus, self.embedder.as_ref(), self.exec)
    }

    pub fn retrieve(&self, query: &str, opts: QueryOptions) -> Result<(RetrievalConfig, Vec<ScoredHit>)> {
        let cfg = self.effective_config(opts)?;
        let hits = self.retrieve_with(query, &cfg)?;
        Ok((cfg, hits))
    }

    /// Retrieves and renders the hits into the named prompt template.
    pub fn assemble(
        &self,
        query: &str,
        opts: QueryOptions,
        template_id: &str,
    ) -> Result<(AssembledPrompt, RetrievalConfig, Vec<ScoredHit>)> {
        if self.templates.get(template_id).is_none() {
            return Err(Error::Config(format!("unknown template {template_id:?}")));
        }
        let (cfg, hits) = self.retrieve(query, opts)?;
        let prompt = assemble_prompt(query, &hits, template_id, &self.templates)?;
        Ok((prompt, cfg, hits))
    }
}
