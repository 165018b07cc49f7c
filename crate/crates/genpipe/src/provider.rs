use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use metahint_core::{HintType, QuestionId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mock::MockProvider;
use crate::remote::RemoteProvider;

/// What a provider call is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Request a corrected program (debugging).
    Repair,
    /// Request a faster correct program (optimization).
    Optimize,
    /// Request the explanation and hint shown to the student.
    Hint,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Repair => "repair",
            Phase::Optimize => "optimize",
            Phase::Hint => "hint",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One chat-completion style request. Routing fields (`phase` onwards) are not
/// sent to remote providers; the mock uses them to pick scripted replies.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub phase: Phase,
    pub question_id: QuestionId,
    pub hint_type: HintType,
    /// 1-based attempt within the phase.
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited")]
    RateLimited,
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("no scripted reply for {0}")]
    NoScenario(String),
    #[error("scripted failure: {0}")]
    Scripted(String),
    #[error("provider misconfigured: {0}")]
    Config(String),
}

impl ProviderError {
    /// Whether a remote call failing this way is worth repeating.
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) | ProviderError::Timeout | ProviderError::RateLimited => true,
            ProviderError::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

pub trait Provider: Send + Sync {
    /// Recorded in hint metadata.
    fn name(&self) -> &str;
    fn model(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    RemoteLlm,
    DeterministicMock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub provider_kind: ProviderKind,
    pub model_name: String,
    /// Chat-completions URL for remote providers.
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key.
    pub credential: Option<String>,
    pub request_timeout: f64,
    pub max_attempts: u32,
    /// Concurrent remote requests across all sessions.
    pub max_in_flight: usize,
    /// First retry delay; doubles per retry.
    pub retry_backoff_ms: u64,
    /// Mock script (JSON). Without one the mock has no replies.
    pub script: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            provider_kind: ProviderKind::DeterministicMock,
            model_name: "mock".into(),
            endpoint: None,
            credential: None,
            request_timeout: 60.0,
            max_attempts: 3,
            max_in_flight: 8,
            retry_backoff_ms: 500,
            script: None,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |m: &str| Err(ProviderError::Config(m.to_string()));
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive");
        }
        if !(self.request_timeout.is_finite() && self.request_timeout > 0.0) {
            return bad("request_timeout must be positive");
        }
        if self.provider_kind == ProviderKind::RemoteLlm {
            if self.endpoint.as_deref().is_none_or(str::is_empty) {
                return bad("remote-llm requires an endpoint");
            }
            if self.credential.as_deref().is_none_or(str::is_empty) {
                return bad("remote-llm requires a credential environment variable name");
            }
            if self.max_in_flight == 0 {
                return bad("max_in_flight must be positive");
            }
        }
        Ok(())
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.request_timeout)
    }

    pub fn build(&self) -> Result<Arc<dyn Provider>, ProviderError> {
        self.validate()?;
        Ok(match self.provider_kind {
            ProviderKind::DeterministicMock => match &self.script {
                Some(path) => Arc::new(MockProvider::from_file(path)?),
                None => Arc::new(MockProvider::default()),
            },
            ProviderKind::RemoteLlm => Arc::new(RemoteProvider::new(self.clone())?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remote_requires_endpoint_and_credential() {
        let mut cfg = ProviderConfig {
            provider_kind: ProviderKind::RemoteLlm,
            ..ProviderConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.endpoint = Some("https://llm.example/v1/chat/completions".into());
        assert!(cfg.validate().is_err());
        cfg.credential = Some("LLM_API_KEY".into());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn mock_needs_no_credential() {
        let cfg = ProviderConfig::default();
        assert!(cfg.credential.is_none());
        assert_eq!(cfg.build().unwrap().name(), "deterministic-mock");
    }

    #[test]
    fn kind_uses_kebab_case() {
        let cfg: ProviderConfig = serde_json::from_str(r#"{"provider_kind":"remote-llm"}"#).unwrap();
        assert_eq!(cfg.provider_kind, ProviderKind::RemoteLlm);
        assert_eq!(cfg.max_attempts, 3);
    }

    #[test]
    fn retry_classification() {
        assert!(ProviderError::Timeout.is_retryable());
        assert!(ProviderError::Http { status: 503, body: String::new() }.is_retryable());
        assert!(!ProviderError::Http { status: 400, body: String::new() }.is_retryable());
        assert!(!ProviderError::Auth("nope".into()).is_retryable());
    }
}
