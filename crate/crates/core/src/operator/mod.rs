//! The coding operator: prompt assembly, completion providers and response parsing.

pub mod http;
pub mod parse;
pub mod playbook;
pub mod prompt;
pub mod provider;

pub use http::{HttpProvider, HttpProviderConfig};
pub use parse::{parse_response, render_proposal, ParseError, Proposal};
pub use playbook::{PlaybookEntry, PlaybookLoadError, PlaybookProvider};
pub use prompt::{build_prompt, PromptBundle, PromptError, TaskBrief, METRIC_SENTINEL, SUBMISSION_PATH};
pub use provider::{
    Message, Provider, ProviderError, ProviderRequest, ProviderResponse, RequestKind, Role,
};

/// Sends `request` through `provider`. Kept as a free function so callers can
/// hold providers as trait objects.
pub fn complete(
    provider: &mut dyn Provider,
    request: &ProviderRequest,
) -> Result<ProviderResponse, ProviderError> {
    provider.complete(request)
}
