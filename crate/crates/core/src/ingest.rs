//! Repository scanning and normalization into [`Document`]s.
//!
//! Files are selected by extension, filtered by exclusion globs and a size
//! cutoff, decoded as UTF-8 and mapped to a [`DocKind`]. Notebooks are
//! exploded into one document per non-empty cell. Per-file failures are
//! collected as [`IngestWarning`]s; only an unusable root is fatal.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Code,
    NotebookCode,
    NotebookMarkdown,
    Markdown,
    Rst,
}

impl DocKind {
    pub fn is_code(self) -> bool {
        matches!(self, DocKind::Code | DocKind::NotebookCode)
    }

    pub const ALL: [DocKind; 5] = [
        DocKind::Code,
        DocKind::NotebookCode,
        DocKind::NotebookMarkdown,
        DocKind::Markdown,
        DocKind::Rst,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    /// Repository-relative path, plus `#cell<N>` for notebook cells.
    pub doc_id: String,
    pub path: String,
    pub kind: DocKind,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repo_rev: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    /// Extensions including the leading dot, e.g. `.py`.
    pub include_extensions: BTreeSet<String>,
    /// Glob patterns matched against the `/`-separated relative path.
    pub exclude_globs: Vec<String>,
    pub max_file_bytes: u64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            include_extensions: [".py", ".ipynb", ".md", ".rst"].into_iter().map(String::from).collect(),
            exclude_globs: vec![".git/**".to_string()],
            max_file_bytes: 1 << 20,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.include_extensions.is_empty() {
            return Err(Error::Config("include_extensions must not be empty".into()));
        }
        if self.max_file_bytes == 0 {
            return Err(Error::Config("max_file_bytes must be > 0".into()));
        }
        Ok(())
    }

    fn exclusion_set(&self) -> Result<GlobSet> {
        let mut builder = GlobSetBuilder::new();
        for pattern in &self.exclude_globs {
            let glob = Glob::new(pattern).map_err(|e| Error::Config(format!("bad exclude glob {pattern:?}: {e}")))?;
            builder.add(glob);
        }
        builder
            .build()
            .map_err(|e| Error::Config(format!("exclude globs: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestWarning {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanReport {
    pub documents: Vec<Document>,
    pub warnings: Vec<IngestWarning>,
}

enum FileClass {
    Plain(DocKind),
    Notebook,
}

fn classify_extension(ext: &str) -> FileClass {
    match ext {
        ".ipynb" => FileClass::Notebook,
        ".md" | ".markdown" => FileClass::Plain(DocKind::Markdown),
        ".rst" => FileClass::Plain(DocKind::Rst),
        _ => FileClass::Plain(DocKind::Code),
    }
}

fn dotted_extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| format!(".{}", e.to_ascii_lowercase()))
}

fn relative_slash_path(root: &Path, path: &Path) -> Option<String> {
    let rel = path.strip_prefix(root).ok()?;
    let parts: Option<Vec<&str>> = rel.components().map(|c| c.as_os_str().to_str()).collect();
    Some(parts?.join("/"))
}

type Accepted = (Vec<(String, PathBuf)>, Vec<IngestWarning>);

/// Lists the accepted files under `root` as `(relative path, absolute path)`,
/// sorted by relative path.
fn accepted_files(root: &Path, config: &IngestConfig) -> Result<Accepted> {
    let excluded = config.exclusion_set()?;
    let mut files = Vec::new();
    let mut warnings = Vec::new();

    for entry in WalkDir::new(root).follow_links(false) {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let path = e.path().and_then(|p| relative_slash_path(root, p)).unwrap_or_default();
                warnings.push(IngestWarning {
                    path,
                    reason: format!("walk error: {e}"),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let Some(ext) = dotted_extension(entry.path()) else {
            continue;
        };
        if !config.include_extensions.contains(&ext) {
            continue;
        }
        let Some(rel) = relative_slash_path(root, entry.path()) else {
            warnings.push(IngestWarning {
                path: entry.path().display().to_string(),
                reason: "path is not valid UTF-8".into(),
            });
            continue;
        };
        if excluded.is_match(&rel) {
            continue;
        }
        files.push((rel, entry.into_path()));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((files, warnings))
}

/// Scans `root` and returns one document per accepted file (one per
/// non-empty cell for notebooks), sorted by path then cell index.
pub fn scan_repository(root: &Path, config: &IngestConfig) -> Result<ScanReport> {
    scan_repository_at_rev(root, config, None)
}

pub fn scan_repository_at_rev(root: &Path, config: &IngestConfig, repo_rev: Option<&str>) -> Result<ScanReport> {
    config.validate()?;
    let meta = fs::metadata(root).map_err(|e| Error::Ingest(format!("cannot read root {}: {e}", root.display())))?;
    if !meta.is_dir() {
        return Err(Error::Ingest(format!("root {} is not a directory", root.display())));
    }
    fs::read_dir(root).map_err(|e| Error::Ingest(format!("cannot list root {}: {e}", root.display())))?;

    let (files, mut warnings) = accepted_files(root, config)?;
    let mut documents = Vec::with_capacity(files.len());

    for (rel, abs) in files {
        let warn = |reason: String| IngestWarning {
            path: rel.clone(),
            reason,
        };
        match fs::metadata(&abs) {
            Ok(m) if m.len() > config.max_file_bytes => {
                warnings.push(warn(format!(
                    "file is {} bytes, over the {} byte limit",
                    m.len(),
                    config.max_file_bytes
                )));
                continue;
            }
            Ok(_) => {}
            Err(e) => {
                warnings.push(warn(format!("stat failed: {e}")));
                continue;
            }
        }
        let bytes = match fs::read(&abs) {
            Ok(b) => b,
            Err(e) => {
                warnings.push(warn(format!("read failed: {e}")));
                continue;
            }
        };
        let text = match String::from_utf8(bytes) {
            Ok(t) => t,
            Err(_) => {
                warnings.push(warn("not valid UTF-8".into()));
                continue;
            }
        };
        let ext = dotted_extension(&abs).unwrap_or_default();
        match classify_extension(&ext) {
            FileClass::Notebook => match parse_notebook(&text, &rel) {
                Ok(mut cells) => {
                    for cell in &mut cells {
                        cell.repo_rev = repo_rev.map(String::from);
                    }
                    documents.extend(cells);
                }
                Err(e) => warnings.push(warn(e.to_string())),
            },
            FileClass::Plain(kind) => {
                if text.trim().is_empty() {
                    warnings.push(warn("empty file".into()));
                    continue;
                }
                documents.push(Document {
                    doc_id: rel.clone(),
                    path: rel,
                    kind,
                    content: text,
                    repo_rev: repo_rev.map(String::from),
                });
            }
        }
    }

    for w in &warnings {
        log::warn!("skipped {}: {}", w.path, w.reason);
    }
    Ok(ScanReport { documents, warnings })
}

#[derive(Deserialize)]
struct NotebookJson {
    cells: Vec<CellJson>,
}

#[derive(Deserialize)]
struct CellJson {
    #[serde(default)]
    cell_type: String,
    #[serde(default)]
    source: CellSource,
}

#[derive(Deserialize, Default)]
#[serde(untagged)]
enum CellSource {
    Text(String),
    Lines(Vec<String>),
    #[default]
    Missing,
}

impl CellSource {
    fn joined(self) -> String {
        match self {
            CellSource::Text(s) => s,
            CellSource::Lines(lines) => lines.concat(),
            CellSource::Missing => String::new(),
        }
    }
}

/// Explodes notebook JSON into one document per non-empty code or markdown
/// cell. Cell indices count every original cell, including skipped ones.
pub fn parse_notebook(raw: &str, path: &str) -> Result<Vec<Document>> {
    let nb: NotebookJson =
        serde_json::from_str(raw).map_err(|e| Error::Ingest(format!("malformed notebook {path}: {e}")))?;
    let docs = nb
        .cells
        .into_iter()
        .enumerate()
        .filter_map(|(idx, cell)| {
            let kind = match cell.cell_type.as_str() {
                "code" => DocKind::NotebookCode,
                "markdown" => DocKind::NotebookMarkdown,
                _ => return None,
            };
            let content = cell.source.joined();
            if content.trim().is_empty() {
                return None;
            }
            Some(Document {
                doc_id: format!("{path}#cell{idx}"),
                path: path.to_string(),
                kind,
                content,
                repo_rev: None,
            })
        })
        .collect();
    Ok(docs)
}
