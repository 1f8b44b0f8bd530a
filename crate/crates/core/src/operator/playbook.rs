//! Scripted provider that serves canned replies in order.
//!
//! Playbook files are JSON arrays of entries:
//!
//! ```json
//! [
//!   {"mode": "draft", "must_contain": "3 rows", "reply": "...", "prompt_tokens": 1000, "completion_tokens": 500}
//! ]
//! ```
//!
//! `mode` (one of `draft`, `debug`, `improve`, `review`) and `must_contain` are
//! optional assertions on the request; token counts default to zero.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::provider::{Provider, ProviderError, ProviderRequest, ProviderResponse, RequestKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaybookEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<RequestKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub must_contain: Option<String>,
    pub reply: String,
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
}

impl PlaybookEntry {
    pub fn reply(reply: impl Into<String>) -> Self {
        Self {
            mode: None,
            must_contain: None,
            reply: reply.into(),
            prompt_tokens: 0,
            completion_tokens: 0,
        }
    }

    pub fn expecting(mode: RequestKind, reply: impl Into<String>) -> Self {
        Self {
            mode: Some(mode),
            ..Self::reply(reply)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PlaybookLoadError {
    #[error("cannot read playbook: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed playbook: {0}")]
    Json(#[from] serde_json::Error),
    #[error("playbook has no entries")]
    Empty,
}

#[derive(Debug, Clone)]
pub struct PlaybookProvider {
    entries: Vec<PlaybookEntry>,
    cursor: usize,
}

impl PlaybookProvider {
    pub fn new(entries: Vec<PlaybookEntry>) -> Result<Self, PlaybookLoadError> {
        if entries.is_empty() {
            return Err(PlaybookLoadError::Empty);
        }
        Ok(Self { entries, cursor: 0 })
    }

    pub fn from_file(path: &Path) -> Result<Self, PlaybookLoadError> {
        let text = fs::read_to_string(path)?;
        Self::new(serde_json::from_str(&text)?)
    }

    /// Marks the first `n` entries as already served (used when resuming).
    pub fn skip(&mut self, n: usize) {
        self.cursor = (self.cursor + n).min(self.entries.len());
    }

    pub fn served(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.cursor
    }
}

impl Provider for PlaybookProvider {
    fn complete(&mut self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let index = self.cursor;
        let entry = self
            .entries
            .get(index)
            .ok_or(ProviderError::PlaybookExhausted { served: index })?;
        if let Some(mode) = entry.mode {
            if mode != request.kind {
                return Err(ProviderError::PlaybookMismatch {
                    index,
                    reason: format!("expected a {mode} request, got {}", request.kind),
                });
            }
        }
        if let Some(needle) = &entry.must_contain {
            if !request.contains(needle) {
                return Err(ProviderError::PlaybookMismatch {
                    index,
                    reason: format!("prompt does not contain {needle:?}"),
                });
            }
        }
        self.cursor += 1;
        Ok(ProviderResponse {
            text: entry.reply.clone(),
            prompt_tokens: entry.prompt_tokens,
            completion_tokens: entry.completion_tokens,
            latency: Duration::ZERO,
            retries: 0,
        })
    }
}
