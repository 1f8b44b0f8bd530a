use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Stage, TokenUsage};

/// Why the engine is calling the provider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Draft,
    Debug,
    Improve,
    Review,
}

impl From<Stage> for RequestKind {
    fn from(stage: Stage) -> Self {
        match stage {
            Stage::Draft => RequestKind::Draft,
            Stage::Debug => RequestKind::Debug,
            Stage::Improve => RequestKind::Improve,
        }
    }
}

impl fmt::Display for RequestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RequestKind::Draft => "draft",
            RequestKind::Debug => "debug",
            RequestKind::Improve => "improve",
            RequestKind::Review => "review",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderRequest {
    pub kind: RequestKind,
    pub messages: Vec<Message>,
    /// Overrides the provider's configured model when set.
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

impl ProviderRequest {
    pub fn new(kind: RequestKind, messages: Vec<Message>) -> Self {
        Self {
            kind,
            messages,
            model: None,
            temperature: None,
            max_tokens: None,
        }
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.messages.iter().any(|m| m.content.contains(needle))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency: Duration,
    /// Transient failures retried before this response arrived.
    pub retries: u32,
}

impl ProviderResponse {
    pub fn usage(&self) -> TokenUsage {
        TokenUsage {
            prompt_tokens: self.prompt_tokens,
            completion_tokens: self.completion_tokens,
            calls: 1,
            latency: self.latency.as_secs_f64(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider rejected credentials: {0}")]
    Auth(String),
    #[error("provider returned a malformed payload: {0}")]
    ContractViolation(String),
    #[error("playbook entry {index} does not match the request: {reason}")]
    PlaybookMismatch { index: usize, reason: String },
    #[error("playbook exhausted after {served} replies")]
    PlaybookExhausted { served: usize },
}

impl ProviderError {
    /// Errors after which no further completions can be expected.
    pub fn is_unavailable(&self) -> bool {
        matches!(
            self,
            ProviderError::Unavailable(_) | ProviderError::PlaybookExhausted { .. }
        )
    }
}

/// A blocking completion backend. At most one call is in flight per instance.
pub trait Provider {
    fn complete(&mut self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn complete(&mut self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        (**self).complete(request)
    }
}
