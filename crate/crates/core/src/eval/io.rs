//! Dataset and transcript files, CSV export, and the external sandbox hook.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;

use super::{BenchmarkItem, Report, Transcript};
use crate::error::{Error, Result};

/// Reads a JSON array of benchmark items. Ids must be unique.
pub fn load_dataset(path: &Path) -> Result<Vec<BenchmarkItem>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let items: Vec<BenchmarkItem> =
        serde_json::from_str(&raw).map_err(|e| Error::Eval(format!("dataset {}: {e}", path.display())))?;
    let mut seen = BTreeSet::new();
    for it in &items {
        if !seen.insert(it.item_id.as_str()) {
            return Err(Error::Eval(format!("duplicate item id {}", it.item_id)));
        }
    }
    Ok(items)
}

fn check_transcript(t: &Transcript, origin: &str) -> Result<()> {
    if let Some(l) = t.lint_score {
        if !(0.0..=10.0).contains(&l) {
            return Err(Error::Eval(format!("{origin}: lint_score {l} outside [0, 10]")));
        }
    }
    Ok(())
}

/// Reads every `*.json` file in `dir` as one transcript, keyed by item id.
pub fn load_transcripts(dir: &Path) -> Result<BTreeMap<String, Transcript>> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = BTreeMap::new();
    for path in paths {
        let raw = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let origin = path.display().to_string();
        let t: Transcript = serde_json::from_str(&raw).map_err(|e| Error::Eval(format!("{origin}: {e}")))?;
        check_transcript(&t, &origin)?;
        if let Some(prev) = out.insert(t.item_id.clone(), t) {
            return Err(Error::Eval(format!(
                "{origin}: duplicate transcript for {}",
                prev.item_id
            )));
        }
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `model,config,accuracy,hallucination,lint` header plus one row.
pub fn report_csv(report: &Report, model: &str, config: &str) -> String {
    let lint = report.overall.mean_lint.map(|l| l.to_string()).unwrap_or_default();
    format!(
        "model,config,accuracy,hallucination,lint\n{},{},{},{},{}\n",
        csv_field(model),
        csv_field(config),
        report.overall.accuracy,
        report.overall.hallucination_rate,
        lint
    )
}

/// External command that executes a code file and prints a transcript JSON
/// on stdout. `{path}` in any argument is replaced by the code file path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SandboxHook {
    pub program: String,
    pub args: Vec<String>,
}

impl SandboxHook {
    /// Splits a command template on whitespace.
    pub fn parse(template: &str) -> Result<Self> {
        let mut parts = template.split_whitespace().map(String::from);
        let program = parts
            .next()
            .ok_or_else(|| Error::Config("empty sandbox command".into()))?;
        Ok(Self {
            program,
            args: parts.collect(),
        })
    }

    pub fn run(&self, code_path: &Path) -> Result<Transcript> {
        let path = code_path.to_string_lossy();
        let args: Vec<String> = self.args.iter().map(|a| a.replace("{path}", &path)).collect();
        let output = Command::new(&self.program)
            .args(&args)
            .output()
            .map_err(|e| Error::io(&self.program, e))?;
        if !output.status.success() {
            return Err(Error::Eval(format!(
                "sandbox command exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let t: Transcript = serde_json::from_slice(&output.stdout)
            .map_err(|e| Error::Eval(format!("sandbox output is not a transcript: {e}")))?;
        check_transcript(&t, "sandbox")?;
        Ok(t)
    }
}
