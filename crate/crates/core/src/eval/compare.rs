//! Functional-correctness comparison of a program's output against the
//! precomputed reference value.

use serde_json::Value;

use super::{ExpectedKind, ExpectedOutput};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub matched: bool,
    /// Why the comparison failed; `None` on a match.
    pub reason: Option<String>,
}

impl Comparison {
    fn ok() -> Self {
        Self {
            matched: true,
            reason: None,
        }
    }

    fn fail(reason: impl Into<String>) -> Self {
        Self {
            matched: false,
            reason: Some(reason.into()),
        }
    }
}

fn unwrap_shaped(actual: &Value) -> &Value {
    match actual {
        Value::Object(m) => m.get("value").unwrap_or(actual),
        _ => actual,
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn as_vector(v: &Value) -> Option<Vec<f64>> {
    match v {
        Value::Array(xs) => xs.iter().map(as_number).collect(),
        Value::String(s) => parse_number_list(s),
        _ => None,
    }
}

/// Parses `[a, b, c]`, `[a b c]` or `a b c`.
pub fn parse_number_list(s: &str) -> Option<Vec<f64>> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.is_empty() {
        return None;
    }
    parts.iter().map(|p| p.parse().ok()).collect()
}

pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn within(a: f64, e: f64, tol: f64) -> bool {
    (a - e).abs() <= tol
}

/// Compares `actual` (a bare value, or an object carrying `value`) against
/// `expected`.
pub fn compare_output(actual: &Value, expected: &ExpectedOutput) -> Comparison {
    let actual = unwrap_shaped(actual);
    match &expected.kind {
        ExpectedKind::Scalar(e) => match as_number(actual) {
            Some(a) if within(a, *e, expected.tolerance) => Comparison::ok(),
            Some(a) => Comparison::fail(format!("value mismatch: |{a} - {e}| > {}", expected.tolerance)),
            None => Comparison::fail("kind mismatch: expected a scalar"),
        },
        ExpectedKind::Vector(e) => match as_vector(actual) {
            Some(a) if a.len() != e.len() => {
                Comparison::fail(format!("length mismatch: expected {}, got {}", e.len(), a.len()))
            }
            Some(a) => {
                let worst = a.iter().zip(e).map(|(x, y)| (x - y).abs()).fold(0.0_f64, |m, d| {
                    if d.is_nan() || m.is_nan() {
                        f64::NAN
                    } else {
                        m.max(d)
                    }
                });
                if worst <= expected.tolerance {
                    Comparison::ok()
                } else {
                    Comparison::fail(format!(
                        "value mismatch: max deviation {worst} > {}",
                        expected.tolerance
                    ))
                }
            }
            None => Comparison::fail("kind mismatch: expected a numeric vector"),
        },
        ExpectedKind::Text(e) => match actual {
            Value::String(a) if normalize_whitespace(a) == normalize_whitespace(e) => Comparison::ok(),
            Value::String(_) => Comparison::fail("text mismatch"),
            _ => Comparison::fail("kind mismatch: expected text"),
        },
    }
}

/// Extracts an actual value from raw stdout when a transcript carries no
/// `parsed_output`: the last non-blank line for numeric kinds, the whole
/// stream for text.
pub fn parse_stdout(stdout: &str, kind: &ExpectedKind) -> Option<Value> {
    match kind {
        ExpectedKind::Text(_) => Some(Value::String(stdout.to_string())),
        ExpectedKind::Scalar(_) | ExpectedKind::Vector(_) => {
            let line = stdout.lines().rev().find(|l| !l.trim().is_empty())?;
            Some(Value::String(line.trim().to_string()))
        }
    }
}
