//! Prompt assembly from retrieved hits.
//!
//! Templates are plain text with `{query}` and `{context}` placeholders. The
//! context is one block per hit, in hit order, each headed by
//! `[source: <path> <start>-<end>]`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::ScoredHit;
use crate::error::{Error, Result};

pub const DEFAULT_TEMPLATE_ID: &str = "default";

const DEFAULT_TEMPLATE: &str = "\
You are a coding assistant for this repository. Answer using the retrieved \
context below. Prefer APIs that appear in the context; if the context does \
not cover the question, say so instead of guessing.

{context}
Question: {query}
";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, String>,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        let mut templates = BTreeMap::new();
        templates.insert(DEFAULT_TEMPLATE_ID.to_string(), DEFAULT_TEMPLATE.to_string());
        Self { templates }
    }
}

impl TemplateRegistry {
    pub fn insert(&mut self, id: impl Into<String>, text: impl Into<String>) -> Result<()> {
        let (id, text) = (id.into(), text.into());
        for placeholder in ["{query}", "{context}"] {
            if !text.contains(placeholder) {
                return Err(Error::Config(format!(
                    "template {id:?} lacks the {placeholder} placeholder"
                )));
            }
        }
        self.templates.insert(id, text);
        Ok(())
    }

    /// Adds every `*.txt` file in `dir`, keyed by file stem.
    pub fn load_dir(&mut self, dir: &Path) -> Result<usize> {
        let mut entries: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        entries.sort();
        for path in &entries {
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Config(format!("bad template name {}", path.display())))?;
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            self.insert(id, text)?;
        }
        Ok(entries.len())
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.templates.get(id).map(String::as_str)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembledPrompt {
    pub text: String,
    /// Length in chars.
    pub length: usize,
}

fn render_context(hits: &[ScoredHit]) -> String {
    let mut out = String::new();
    for h in hits {
        out.push_str(&format!("[source: {} {}]\n", h.path, h.span));
        out.push_str(&h.text);
        out.push_str("\n\n");
    }
    out
}

/// Substitutes placeholders in one left-to-right pass so that text inside
/// the query or context is never re-expanded.
fn substitute(template: &str, query: &str, context: &str) -> String {
    let mut out = String::with_capacity(template.len() + query.len() + context.len());
    let mut rest = template;
    loop {
        let next = [("{query}", query), ("{context}", context)]
            .into_iter()
            .filter_map(|(ph, val)| rest.find(ph).map(|at| (at, ph, val)))
            .min_by_key(|&(at, _, _)| at);
        match next {
            Some((at, ph, val)) => {
                out.push_str(&rest[..at]);
                out.push_str(val);
                rest = &rest[at + ph.len()..];
            }
            None => {
                out.push_str(rest);
                return out;
            }
        }
    }
}

pub fn assemble_prompt(
    query: &str,
    hits: &[ScoredHit],
    template_id: &str,
    registry: &TemplateRegistry,
) -> Result<AssembledPrompt> {
    let template = registry
        .get(template_id)
        .ok_or_else(|| Error::Config(format!("unknown template {template_id:?}")))?;
    let text = substitute(template, query, &render_context(hits));
    let length = text.chars().count();
    Ok(AssembledPrompt { text, length })
}
