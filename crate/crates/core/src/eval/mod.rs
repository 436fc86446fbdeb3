//! Evaluation of generated-code execution transcripts.
//!
//! Each benchmark item carries a precomputed reference value. A transcript
//! records one run of a model's generated program. [`evaluate`] assigns every
//! item one [`Outcome`] and [`aggregate`] folds the verdicts into rates.

mod classify;
mod compare;
mod io;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::par::{self, Exec};

pub use classify::{classify_error, final_exception, ErrorClassification, HALLUCINATION_ERRORS};
pub use compare::{compare_output, normalize_whitespace, parse_number_list, parse_stdout, Comparison};
pub use io::{load_dataset, load_transcripts, report_csv, SandboxHook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Configuration,
    CorePrimitives,
    AdvancedSimulation,
    Algorithmic,
    Debugging,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpectedKind {
    Scalar(f64),
    Vector(Vec<f64>),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExpected", into = "RawExpected")]
pub struct ExpectedOutput {
    pub kind: ExpectedKind,
    /// Absolute tolerance for numeric kinds.
    pub tolerance: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpected {
    kind: String,
    value: Value,
    #[serde(default)]
    tolerance: f64,
}

impl TryFrom<RawExpected> for ExpectedOutput {
    type Error = String;

    fn try_from(raw: RawExpected) -> std::result::Result<Self, String> {
        if !(raw.tolerance >= 0.0 && raw.tolerance.is_finite()) {
            return Err(format!("tolerance must be finite and >= 0, got {}", raw.tolerance));
        }
        let kind = match raw.kind.as_str() {
            "scalar" => ExpectedKind::Scalar(raw.value.as_f64().ok_or("scalar value must be a number")?),
            "vector" => {
                let xs = raw
                    .value
                    .as_array()
                    .ok_or("vector value must be an array")?
                    .iter()
                    .map(|v| v.as_f64().ok_or("vector entries must be numbers"))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                if xs.is_empty() {
                    return Err("vector value must be non-empty".into());
                }
                ExpectedKind::Vector(xs)
            }
            "text" => ExpectedKind::Text(raw.value.as_str().ok_or("text value must be a string")?.to_string()),
            other => return Err(format!("unknown expected kind {other:?}")),
        };
        Ok(Self {
            kind,
            tolerance: raw.tolerance,
        })
    }
}

impl From<ExpectedOutput> for RawExpected {
    fn from(e: ExpectedOutput) -> Self {
        let (kind, value) = match e.kind {
            ExpectedKind::Scalar(x) => ("scalar", serde_json::json!(x)),
            ExpectedKind::Vector(xs) => ("vector", serde_json::json!(xs)),
            ExpectedKind::Text(s) => ("text", Value::String(s)),
        };
        Self {
            kind: kind.into(),
            value,
            tolerance: e.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    #[serde(rename = "id")]
    pub item_id: String,
    pub question: String,
    pub category: Category,
    #[serde(rename = "expected")]
    pub ground_truth: ExpectedOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    #[serde(rename = "id")]
    pub item_id: String,
    #[serde(default)]
    pub stdout: String,
    #[serde(default)]
    pub stderr: String,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed_output: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lint_score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    LogicalError,
    Hallucination,
    ExecutionError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub item_id: String,
    pub outcome: Outcome,
    pub matched: bool,
    pub error_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Scores one item. A missing transcript counts as an execution error.
pub fn evaluate_item(item: &BenchmarkItem, transcript: Option<&Transcript>) -> Verdict {
    let Some(t) = transcript else {
        return Verdict {
            item_id: item.item_id.clone(),
            outcome: Outcome::ExecutionError,
            matched: false,
            error_class: None,
            reason: Some("missing transcript".into()),
        };
    };
    let cmp = match t
        .parsed_output
        .clone()
        .or_else(|| parse_stdout(&t.stdout, &item.ground_truth.kind))
    {
        Some(actual) => compare_output(&actual, &item.ground_truth),
        None => Comparison {
            matched: false,
            reason: Some("no output to compare".into()),
        },
    };
    let class = classify_error(&t.stderr, t.exit_code);
    let outcome = match class.outcome {
        Some(o) => o,
        None if cmp.matched => Outcome::Correct,
        None => Outcome::LogicalError,
    };
    Verdict {
        item_id: item.item_id.clone(),
        outcome,
        matched: cmp.matched,
        error_class: class.error_class,
        reason: cmp.reason,
    }
}

/// Scores every item against the transcript with the same id.
pub fn evaluate(items: &[BenchmarkItem], transcripts: &BTreeMap<String, Transcript>, exec: Exec) -> Vec<Verdict> {
    par::map_slice(exec, items, |item| evaluate_item(item, transcripts.get(&item.item_id)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub correct: usize,
    pub logical_error: usize,
    pub hallucination: usize,
    pub execution_error: usize,
}

impl OutcomeCounts {
    fn add(&mut self, o: Outcome) {
        match o {
            Outcome::Correct => self.correct += 1,
            Outcome::LogicalError => self.logical_error += 1,
            Outcome::Hallucination => self.hallucination += 1,
            Outcome::ExecutionError => self.execution_error += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.correct + self.logical_error + self.hallucination + self.execution_error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub n_items: usize,
    pub counts: OutcomeCounts,
    pub accuracy: f64,
    pub logical_error_rate: f64,
    pub hallucination_rate: f64,
    pub execution_error_rate: f64,
    pub mean_lint: Option<f64>,
}

#[derive(Default)]
struct Tally {
    counts: OutcomeCounts,
    lint_sum: f64,
    lint_n: usize,
}

impl Tally {
    fn rates(&self) -> Rates {
        let n = self.counts.total();
        let r = |c: usize| c as f64 / n as f64;
        Rates {
            n_items: n,
            counts: self.counts,
            accuracy: r(self.counts.correct),
            logical_error_rate: r(self.counts.logical_error),
            hallucination_rate: r(self.counts.hallucination),
            execution_error_rate: r(self.counts.execution_error),
            mean_lint: (self.lint_n > 0).then(|| self.lint_sum / self.lint_n as f64),
        }
    }
}

/// One radar-chart row: the three plotted axes for a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarRow {
    pub label: String,
    pub correctness: f64,
    pub hallucination: f64,
    pub lint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(flatten)]
    pub overall: Rates,
    pub per_category: BTreeMap<Category, Rates>,
    pub radar: Vec<RadarRow>,
    pub verdicts: Vec<Verdict>,
}

/// Folds verdicts into a report. Every item needs exactly one verdict.
pub fn aggregate(
    items: &[BenchmarkItem],
    verdicts: &[Verdict],
    transcripts: &BTreeMap<String, Transcript>,
) -> Result<Report> {
    if items.is_empty() {
        return Err(Error::Eval("cannot aggregate an empty item set".into()));
    }
    let mut by_id: BTreeMap<&str, &Verdict> = BTreeMap::new();
    for v in verdicts {
        if by_id.insert(v.item_id.as_str(), v).is_some() {
            return Err(Error::Eval(format!("duplicate verdict for item {}", v.item_id)));
        }
    }
    if by_id.len() != items.len() {
        return Err(Error::Eval(format!(
            "{} verdicts for {} items",
            by_id.len(),
            items.len()
        )));
    }

    let mut overall = Tally::default();
    let mut per_cat: BTreeMap<Category, Tally> = BTreeMap::new();
    let mut ordered = Vec::with_capacity(items.len());
    for item in items {
        let v = by_id
            .get(item.item_id.as_str())
            .ok_or_else(|| Error::Eval(format!("no verdict for item {}", item.item_id)))?;
        let lint = transcripts.get(&item.item_id).and_then(|t| t.lint_score);
        for tally in [&mut overall, per_cat.entry(item.category).or_default()] {
            tally.counts.add(v.outcome);
            if let Some(l) = lint {
                tally.lint_sum += l;
                tally.lint_n += 1;
            }
        }
        ordered.push((*v).clone());
    }

    let overall = overall.rates();
    let per_category: BTreeMap<Category, Rates> = per_cat.iter().map(|(c, t)| (*c, t.rates())).collect();
    let row = |label: String, r: &Rates| RadarRow {
        label,
        correctness: r.accuracy,
        hallucination: r.hallucination_rate,
        lint: r.mean_lint,
    };
    let mut radar = vec![row("overall".into(), &overall)];
    for (c, r) in &per_category {
        let label = serde_json::to_value(c)?.as_str().unwrap_or_default().to_string();
        radar.push(row(label, r));
    }
    Ok(Report {
        overall,
        per_category,
        radar,
        verdicts: ordered,
    })
}
