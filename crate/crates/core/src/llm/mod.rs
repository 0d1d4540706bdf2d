//! Text-completion providers.
//!
//! Two implementations sit behind [`CompletionProvider`]: an HTTP client for
//! OpenAI-compatible completion endpoints and a deterministic stub that draws
//! fragments from a bundled corpus. Callers only see the provider kind.

mod http;
mod stub;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::story::{GenerationRequest, Purpose, COHERENT_TEMPERATURE, CREATIVE_TEMPERATURE};

pub use http::HttpProvider;
pub use stub::{stub_fragment, StubCorpus, StubPool, StubProvider};

pub const API_KEY_ENV: &str = "SNAKE_STORY_API_KEY";
pub const API_URL_ENV: &str = "SNAKE_STORY_API_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProviderKind {
    HttpCompletion,
    DeterministicStub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub latency_ms: u64,
    pub provider_kind: ProviderKind,
    /// The provider stopped at the token limit.
    pub truncated: bool,
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("provider returned HTTP {status}: {message}")]
    Provider { status: u16, message: String },
    #[error("provider rejected the credential (HTTP {status})")]
    Auth { status: u16 },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("provider configuration: {0}")]
    Config(String),
}

/// A blocking completion client. Implementations are stateless and shareable
/// across threads.
pub trait CompletionProvider: Send + Sync {
    fn kind(&self) -> ProviderKind;

    /// Completes `request` within `budget` of wall time, retries included.
    fn complete(&self, request: &GenerationRequest, budget: Duration) -> Result<CompletionResult, LlmError>;
}

pub fn validate_request(request: &GenerationRequest) -> Result<(), LlmError> {
    if request.max_tokens == 0 {
        return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
    }
    if let Purpose::Segment(_) = request.purpose {
        let t = request.temperature;
        if t != COHERENT_TEMPERATURE && t != CREATIVE_TEMPERATURE {
            return Err(LlmError::InvalidRequest(format!(
                "segment temperature {t} is not 0.6 or 1.4"
            )));
        }
    }
    Ok(())
}

/// An API credential. Never printed.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WireFormat {
    /// `POST {model, prompt, temperature, max_tokens}`, reply in `choices[0].text`.
    #[default]
    Completions,
    /// The prompt wrapped as one user message, reply in `choices[0].message.content`.
    Chat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub endpoint: Option<String>,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: String,
    /// Seconds per attempt.
    pub timeout: f64,
    pub max_retries: u32,
    pub wire_format: WireFormat,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::DeterministicStub,
            endpoint: None,
            model: "gpt-3.5-turbo-instruct".into(),
            auth_env: API_KEY_ENV.into(),
            timeout: 8.0,
            max_retries: 2,
            wire_format: WireFormat::Completions,
        }
    }
}

impl ProviderConfig {
    pub fn stub() -> Self {
        Self::default()
    }

    /// HTTP provider settings with the endpoint taken from `SNAKE_STORY_API_URL`.
    pub fn http_from_env() -> Self {
        Self {
            kind: ProviderKind::HttpCompletion,
            endpoint: std::env::var(API_URL_ENV).ok(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(LlmError::Config(format!(
                "timeout must be positive, got {}",
                self.timeout
            )));
        }
        if self.kind == ProviderKind::HttpCompletion && self.endpoint.is_none() {
            return Err(LlmError::Config(format!(
                "http provider needs an endpoint (set {API_URL_ENV})"
            )));
        }
        Ok(())
    }

    pub fn build(&self, stub_seed: u64) -> Result<Box<dyn CompletionProvider>, LlmError> {
        self.validate()?;
        match self.kind {
            ProviderKind::DeterministicStub => Ok(Box::new(StubProvider::new(stub_seed))),
            ProviderKind::HttpCompletion => {
                let secret = std::env::var(&self.auth_env).ok().map(Secret::new);
                Ok(Box::new(HttpProvider::new(self.clone(), secret)?))
            }
        }
    }
}

/// Removes the prompt from the start of `text` when a provider echoes it.
pub fn strip_echo<'a>(prompt: &str, text: &'a str) -> &'a str {
    text.strip_prefix(prompt).unwrap_or(text)
}
