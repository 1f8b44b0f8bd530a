//! Chat-completions style JSON client.
//!
//! Request body: `{"model", "messages": [{"role", "content"}], "temperature", "max_tokens"?}`.
//! Response body: `{"choices": [{"message": {"content"}}], "usage": {"prompt_tokens", "completion_tokens"}}`.
//! Status 408, 429 and 5xx as well as transport failures are retried with
//! exponential backoff; 401/403 fail immediately.

use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::provider::{Message, Provider, ProviderError, ProviderRequest, ProviderResponse};
use crate::config::RetryPolicy;

#[derive(Debug, Clone)]
pub struct HttpProviderConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub request_timeout: Duration,
    pub retry: RetryPolicy,
}

pub struct HttpProvider {
    config: HttpProviderConfig,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct ChatBody<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

enum Attempt {
    Done(ProviderResponse),
    Transient {
        reason: String,
        retry_after: Option<Duration>,
    },
    Fatal(ProviderError),
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.request_timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn attempt(&self, request: &ProviderRequest) -> Attempt {
        let body = ChatBody {
            model: request.model.as_deref().unwrap_or(&self.config.model),
            messages: &request.messages,
            temperature: request.temperature.unwrap_or(self.config.temperature),
            max_tokens: request.max_tokens.or(self.config.max_tokens),
        };
        let mut call = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = match call.send_json(&body) {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Transient {
                    reason: e.to_string(),
                    retry_after: None,
                }
            }
        };

        let status = response.status().as_u16();
        let retry_after = response
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => {
                return Attempt::Transient {
                    reason: format!("reading body: {e}"),
                    retry_after: None,
                }
            }
        };

        match status {
            200..=299 => match parse_reply(&text) {
                Ok((content, usage)) => Attempt::Done(ProviderResponse {
                    text: content,
                    prompt_tokens: usage.prompt_tokens,
                    completion_tokens: usage.completion_tokens,
                    latency: Duration::ZERO,
                    retries: 0,
                }),
                Err(e) => Attempt::Fatal(e),
            },
            401 | 403 => Attempt::Fatal(ProviderError::Auth(format!(
                "HTTP {status}: {}",
                excerpt(&text)
            ))),
            408 | 429 | 500..=599 => Attempt::Transient {
                reason: format!("HTTP {status}"),
                retry_after,
            },
            _ => Attempt::Fatal(ProviderError::ContractViolation(format!(
                "HTTP {status}: {}",
                excerpt(&text)
            ))),
        }
    }
}

fn excerpt(text: &str) -> String {
    crate::text::truncate_head(text.trim(), 300, "...")
}

fn parse_reply(text: &str) -> Result<(String, Usage), ProviderError> {
    let reply: ChatReply = serde_json::from_str(text)
        .map_err(|e| ProviderError::ContractViolation(format!("{e}: {}", excerpt(text))))?;
    let content = reply
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| ProviderError::ContractViolation("reply has no message content".into()))?;
    let usage = reply.usage.unwrap_or(Usage {
        prompt_tokens: 0,
        completion_tokens: 0,
    });
    Ok((content, usage))
}

impl Provider for HttpProvider {
    fn complete(&mut self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let started = Instant::now();
        let policy = &self.config.retry;
        let mut retries = 0u32;
        loop {
            match self.attempt(request) {
                Attempt::Done(mut resp) => {
                    resp.latency = started.elapsed();
                    resp.retries = retries;
                    debug!(
                        "completion in {:.2}s after {retries} retries",
                        resp.latency.as_secs_f64()
                    );
                    return Ok(resp);
                }
                Attempt::Fatal(err) => return Err(err),
                Attempt::Transient {
                    reason,
                    retry_after,
                } => {
                    if retries >= policy.max_retries {
                        return Err(ProviderError::Unavailable(format!(
                            "{reason} (gave up after {retries} retries)"
                        )));
                    }
                    let max = Duration::from_millis(policy.max_delay_ms);
                    let delay = retry_after.map_or_else(|| policy.delay(retries), |d| d.min(max));
                    warn!("transient provider failure: {reason}; retrying in {delay:?}");
                    thread::sleep(delay);
                    retries += 1;
                }
            }
        }
    }
}
