use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{
    strip_echo, validate_request, CompletionProvider, CompletionResult, LlmError, ProviderConfig, ProviderKind, Secret,
    WireFormat,
};
use crate::story::GenerationRequest;

const FIRST_BACKOFF: Duration = Duration::from_millis(250);
const MAX_BACKOFF: Duration = Duration::from_secs(1);

/// Blocking client for OpenAI-compatible completion endpoints.
pub struct HttpProvider {
    config: ProviderConfig,
    endpoint: String,
    secret: Option<Secret>,
    agent: ureq::Agent,
}

enum Failure {
    Timeout,
    Transport(String),
    Status(u16, String),
}

impl HttpProvider {
    pub fn new(config: ProviderConfig, secret: Option<Secret>) -> Result<Self, LlmError> {
        config.validate()?;
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| LlmError::Config("missing endpoint".into()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Ok(Self {
            config,
            endpoint,
            secret,
            agent,
        })
    }

    fn body(&self, request: &GenerationRequest) -> Value {
        match self.config.wire_format {
            WireFormat::Completions => json!({
                "model": self.config.model,
                "prompt": request.prompt,
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
            }),
            WireFormat::Chat => json!({
                "model": self.config.model,
                "messages": [{"role": "user", "content": request.prompt}],
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
            }),
        }
    }

    fn attempt(&self, body: &Value, timeout: Duration) -> Result<Value, Failure> {
        let mut req = self
            .agent
            .post(&self.endpoint)
            .config()
            .timeout_global(Some(timeout))
            .build()
            .header("Content-Type", "application/json");
        if let Some(secret) = &self.secret {
            req = req.header("Authorization", format!("Bearer {}", secret.expose()));
        }
        let mut resp = req.send_json(body).map_err(classify)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(classify)?;
        if !(200..300).contains(&status) {
            return Err(Failure::Status(status, text.chars().take(200).collect()));
        }
        serde_json::from_str(&text).map_err(|e| Failure::Status(status, format!("invalid JSON: {e}")))
    }

    fn extract(&self, reply: &Value) -> Result<(String, bool), LlmError> {
        let choice = reply
            .get("choices")
            .and_then(|c| c.get(0))
            .ok_or_else(|| LlmError::Malformed("no choices".into()))?;
        let text = match self.config.wire_format {
            WireFormat::Completions => choice.get("text"),
            WireFormat::Chat => choice.get("message").and_then(|m| m.get("content")),
        }
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::Malformed("choice carries no text".into()))?;
        let truncated = choice.get("finish_reason").and_then(Value::as_str) == Some("length");
        Ok((text.to_string(), truncated))
    }
}

fn classify(err: ureq::Error) -> Failure {
    match err {
        ureq::Error::Timeout(_) => Failure::Timeout,
        ureq::Error::Io(e) if matches!(e.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) => {
            Failure::Timeout
        }
        ureq::Error::StatusCode(status) => Failure::Status(status, String::new()),
        other => Failure::Transport(other.to_string()),
    }
}

fn retryable(status: u16) -> bool {
    status == 408 || status == 429 || status >= 500
}

impl CompletionProvider for HttpProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::HttpCompletion
    }

    fn complete(&self, request: &GenerationRequest, budget: Duration) -> Result<CompletionResult, LlmError> {
        validate_request(request)?;
        let started = Instant::now();
        let body = self.body(request);
        let per_attempt = Duration::from_secs_f64(self.config.timeout);
        let mut backoff = FIRST_BACKOFF;
        let mut attempts = 0;
        loop {
            let remaining = budget.saturating_sub(started.elapsed());
            if remaining.is_zero() {
                return Err(LlmError::Timeout { attempts });
            }
            attempts += 1;
            let failure = match self.attempt(&body, per_attempt.min(remaining)) {
                Ok(reply) => {
                    let (text, truncated) = self.extract(&reply)?;
                    return Ok(CompletionResult {
                        text: strip_echo(&request.prompt, &text).to_string(),
                        latency_ms: started.elapsed().as_millis() as u64,
                        provider_kind: ProviderKind::HttpCompletion,
                        truncated,
                    });
                }
                Err(f) => f,
            };
            if let Failure::Status(status, message) = &failure {
                if *status == 401 || *status == 403 {
                    return Err(LlmError::Auth { status: *status });
                }
                if !retryable(*status) {
                    return Err(LlmError::Provider {
                        status: *status,
                        message: message.clone(),
                    });
                }
            }
            let out_of_budget = budget.saturating_sub(started.elapsed()) <= backoff;
            if attempts > self.config.max_retries || out_of_budget {
                return Err(match failure {
                    Failure::Timeout => LlmError::Timeout { attempts },
                    Failure::Transport(message) => LlmError::Transport { attempts, message },
                    Failure::Status(status, message) => LlmError::Provider { status, message },
                });
            }
            std::thread::sleep(backoff);
            backoff = (backoff * 4).min(MAX_BACKOFF);
        }
    }
}
