//! Runtime-error taxonomy from a traceback's final exception line.

use std::sync::LazyLock;

use regex::Regex;

use super::Outcome;

/// Exception names read as evidence of a fabricated API.
pub const HALLUCINATION_ERRORS: [&str; 3] = ["AttributeError", "ImportError", "ModuleNotFoundError"];

const BARE_EXCEPTIONS: [&str; 5] = [
    "KeyboardInterrupt",
    "SystemExit",
    "StopIteration",
    "StopAsyncIteration",
    "GeneratorExit",
];

static EXCEPTION_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^([A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)(?::(?:\s.*)?)?$").expect("valid regex")
});

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorClassification {
    /// `None` when the run exited cleanly and the outcome is left to the
    /// output comparison.
    pub outcome: Option<Outcome>,
    pub error_class: Option<String>,
}

fn is_exception_name(name: &str) -> bool {
    let last = name.rsplit('.').next().unwrap_or(name);
    last.ends_with("Error") || last.ends_with("Exception") || BARE_EXCEPTIONS.contains(&last)
}

/// Name of the last exception line in `stderr`, if any.
pub fn final_exception(stderr: &str) -> Option<&str> {
    stderr.lines().rev().find_map(|line| {
        let caps = EXCEPTION_LINE.captures(line.trim_end())?;
        let name = caps.get(1)?.as_str();
        is_exception_name(name).then_some(name)
    })
}

pub fn classify_error(stderr: &str, exit_code: i32) -> ErrorClassification {
    if exit_code == 0 {
        return ErrorClassification {
            outcome: None,
            error_class: None,
        };
    }
    match final_exception(stderr) {
        Some(name) => {
            let short = name.rsplit('.').next().unwrap_or(name);
            let outcome = if HALLUCINATION_ERRORS.contains(&short) {
                Outcome::Hallucination
            } else {
                Outcome::LogicalError
            };
            ErrorClassification {
                outcome: Some(outcome),
                error_class: Some(name.to_string()),
            }
        }
        None => ErrorClassification {
            outcome: Some(Outcome::ExecutionError),
            error_class: None,
        },
    }
}
