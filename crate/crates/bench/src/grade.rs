//! Scores a submission by running an external grader command.
//!
//! The command template must contain `{submission}`; the grader reports its
//! score on stdout or stderr as a `VALIDATION_METRIC: <number>` line.

use std::path::Path;
use std::process::Command;

use thiserror::Error;

use codetree_core::reviewer::{extract_sentinel, SentinelValue};

pub const SUBMISSION_PLACEHOLDER: &str = "{submission}";

#[derive(Debug, Error)]
pub enum GradeError {
    #[error("grader command {0:?} is empty, unbalanced or lacks {{submission}}")]
    BadCommand(String),
    #[error("cannot start grader: {0}")]
    Spawn(std::io::Error),
    #[error("grader failed ({status}): {output}")]
    Failed { status: String, output: String },
    #[error("grader printed no usable score line")]
    NoScore,
}

pub fn grade(command: &str, submission: &Path) -> Result<f64, GradeError> {
    let argv = shlex::split(command)
        .filter(|a| !a.is_empty() && a.iter().any(|s| s.contains(SUBMISSION_PLACEHOLDER)))
        .ok_or_else(|| GradeError::BadCommand(command.to_string()))?;
    let sub = submission.to_string_lossy();
    let argv: Vec<String> = argv
        .iter()
        .map(|a| a.replace(SUBMISSION_PLACEHOLDER, &sub))
        .collect();
    let out = Command::new(&argv[0])
        .args(&argv[1..])
        .output()
        .map_err(GradeError::Spawn)?;
    let text = format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    if !out.status.success() {
        return Err(GradeError::Failed {
            status: out.status.to_string(),
            output: text.trim().to_string(),
        });
    }
    match extract_sentinel(&text) {
        Some(SentinelValue::Finite(v)) => Ok(v),
        _ => Err(GradeError::NoScore),
    }
}
