//! Turns an execution result into a verdict: buggy, or valid with a metric.
//!
//! Candidates report their validation score by printing a line
//! `VALIDATION_METRIC: <decimal>`; when several such lines appear the last one
//! wins. Output without the sentinel can optionally be handed to a provider,
//! which must answer with JSON `{"is_bug": bool, "metric": number|null, "summary": string}`.

use std::sync::LazyLock;

use log::warn;
use regex::Regex;
use serde::Deserialize;

use crate::model::{ExecutionResult, ExitStatus, MetricValue, TokenUsage};
use crate::operator::{Message, Provider, ProviderError, ProviderRequest, RequestKind, METRIC_SENTINEL};
use crate::text::{error_hint, one_line, truncate_middle};

const SUMMARY_MAX: usize = 240;
const REVIEW_OUTPUT_CAP: usize = 16 * 1024;
pub const NO_METRIC: &str = "no metric reported";

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewVerdict {
    pub is_buggy: bool,
    pub metric: Option<MetricValue>,
    pub summary: String,
}

impl ReviewVerdict {
    pub fn buggy(summary: impl AsRef<str>) -> Self {
        Self {
            is_buggy: true,
            metric: None,
            summary: one_line(summary.as_ref(), SUMMARY_MAX),
        }
    }

    fn valid(metric: MetricValue, summary: impl AsRef<str>) -> Self {
        Self {
            is_buggy: false,
            metric: Some(metric),
            summary: one_line(summary.as_ref(), SUMMARY_MAX),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Review {
    pub verdict: ReviewVerdict,
    /// Token usage of the provider review, when one was made.
    pub usage: Option<TokenUsage>,
}

static SENTINEL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"(?m)^\s*{METRIC_SENTINEL}:\s*(\S+)\s*$")).expect("static regex")
});

#[derive(Debug, Clone, PartialEq)]
pub enum SentinelValue {
    Finite(f64),
    NonFinite(String),
    Unparseable(String),
}

/// Value of the last sentinel line in `term_out`.
pub fn extract_sentinel(term_out: &str) -> Option<SentinelValue> {
    let raw = SENTINEL.captures_iter(term_out).last()?.get(1)?.as_str();
    Some(match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => SentinelValue::Finite(v),
        Ok(_) => SentinelValue::NonFinite(raw.to_string()),
        Err(_) => SentinelValue::Unparseable(raw.to_string()),
    })
}

fn failure_summary(exec: &ExecutionResult) -> String {
    match &exec.exit_status {
        ExitStatus::Success => NO_METRIC.to_string(),
        ExitStatus::NonZeroExit { code } => error_hint(&exec.term_out)
            .unwrap_or_else(|| format!("process exited with code {code}")),
        ExitStatus::Timeout => format!("timed out after {:.1}s", exec.exec_time),
        ExitStatus::SpawnError { message } => format!("failed to start interpreter: {message}"),
    }
}

#[derive(Deserialize)]
struct LlmVerdict {
    is_bug: bool,
    metric: Option<f64>,
    #[serde(default)]
    summary: String,
}

fn parse_llm_verdict(text: &str) -> Result<LlmVerdict, String> {
    let start = text.find('{').ok_or("no JSON object in reply")?;
    let end = text.rfind('}').ok_or("no JSON object in reply")?;
    if end < start {
        return Err("no JSON object in reply".into());
    }
    serde_json::from_str(&text[start..=end]).map_err(|e| e.to_string())
}

fn review_request(exec: &ExecutionResult, lower_is_better: bool) -> ProviderRequest {
    let direction = if lower_is_better {
        "lower is better"
    } else {
        "higher is better"
    };
    let user = format!(
        "A machine learning program finished. Decide whether it ran correctly and which \
         validation metric it reported ({direction}).\n\nExecution output:\n```\n{}\n```\n\n\
         Reply with a single JSON object: {{\"is_bug\": true|false, \"metric\": <number or null>, \
         \"summary\": \"<one line>\"}}.",
        truncate_middle(&exec.term_out, REVIEW_OUTPUT_CAP)
    );
    ProviderRequest::new(
        RequestKind::Review,
        vec![
            Message::system("You review execution logs of machine learning programs."),
            Message::user(user),
        ],
    )
}

/// Scores one execution. Non-successful runs are always buggy; successful runs
/// need the metric sentinel or, failing that, a provider review.
pub fn review(
    exec: &ExecutionResult,
    lower_is_better: bool,
    provider: Option<&mut dyn Provider>,
) -> Result<Review, ProviderError> {
    if !exec.exit_status.is_success() {
        return Ok(Review {
            verdict: ReviewVerdict::buggy(failure_summary(exec)),
            usage: None,
        });
    }

    match extract_sentinel(&exec.term_out) {
        Some(SentinelValue::Finite(v)) => {
            let metric = MetricValue::new(v, lower_is_better).expect("finite by construction");
            return Ok(Review {
                verdict: ReviewVerdict::valid(metric, format!("validation metric {v}")),
                usage: None,
            });
        }
        Some(SentinelValue::NonFinite(raw)) => {
            return Ok(Review {
                verdict: ReviewVerdict::buggy(format!("non-finite metric reported: {raw}")),
                usage: None,
            });
        }
        Some(SentinelValue::Unparseable(_)) | None => {}
    }

    let Some(provider) = provider else {
        return Ok(Review {
            verdict: ReviewVerdict::buggy(NO_METRIC),
            usage: None,
        });
    };

    let response = match provider.complete(&review_request(exec, lower_is_better)) {
        Ok(r) => r,
        Err(ProviderError::ContractViolation(msg)) => {
            warn!("review provider returned a malformed payload: {msg}");
            return Ok(Review {
                verdict: ReviewVerdict::buggy(NO_METRIC),
                usage: None,
            });
        }
        Err(e) => return Err(e),
    };
    let usage = Some(response.usage());
    let verdict = match parse_llm_verdict(&response.text) {
        Err(e) => {
            warn!("unparseable review reply: {e}");
            ReviewVerdict::buggy(NO_METRIC)
        }
        Ok(v) if v.is_bug => ReviewVerdict::buggy(if v.summary.is_empty() {
            "reviewer flagged a bug".to_string()
        } else {
            v.summary
        }),
        Ok(LlmVerdict {
            metric: Some(m),
            summary,
            ..
        }) => match MetricValue::new(m, lower_is_better) {
            Ok(metric) => ReviewVerdict::valid(
                metric,
                if summary.is_empty() {
                    format!("validation metric {m}")
                } else {
                    summary
                },
            ),
            Err(_) => ReviewVerdict::buggy("non-finite metric reported"),
        },
        Ok(_) => ReviewVerdict::buggy(NO_METRIC),
    };
    Ok(Review { verdict, usage })
}
