use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::provider::{ChatRequest, Provider, ProviderError};

pub const MOCK_PROVIDER_NAME: &str = "deterministic-mock";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ScriptedReply {
    Text(String),
    Failure { error: String },
}

/// Scenario tag → replies, one per attempt. Attempts beyond the list reuse the
/// last reply.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub scenarios: BTreeMap<String, Vec<ScriptedReply>>,
}

impl MockScript {
    pub fn with(mut self, tag: impl Into<String>, replies: Vec<ScriptedReply>) -> Self {
        self.scenarios.insert(tag.into(), replies);
        self
    }
}

/// Replays a script. Lookup is most specific first:
/// `{question}/{phase}.{type}`, `{question}/{phase}`, `{phase}.{type}`, `{phase}`.
/// Replies depend only on the request's routing fields, so results are reproducible.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    script: MockScript,
}

impl MockProvider {
    pub fn new(script: MockScript) -> Self {
        Self { script }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("mock script {}: {e}", path.display())))?;
        let script = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Config(format!("mock script {}: {e}", path.display())))?;
        Ok(Self::new(script))
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }

    fn lookup(&self, request: &ChatRequest) -> Option<&[ScriptedReply]> {
        let q = request.question_id.as_str();
        let phase = request.phase.as_str();
        let ty = request.hint_type.as_str();
        [
            format!("{q}/{phase}.{ty}"),
            format!("{q}/{phase}"),
            format!("{phase}.{ty}"),
            phase.to_string(),
        ]
        .iter()
        .find_map(|tag| self.script.scenarios.get(tag))
        .map(Vec::as_slice)
        .filter(|replies| !replies.is_empty())
    }
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        MOCK_PROVIDER_NAME
    }

    fn model(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let replies = self.lookup(request).ok_or_else(|| {
            ProviderError::NoScenario(format!(
                "{}/{}.{}",
                request.question_id, request.phase, request.hint_type
            ))
        })?;
        let idx = (request.attempt.max(1) as usize - 1).min(replies.len() - 1);
        match &replies[idx] {
            ScriptedReply::Text(text) => Ok(text.clone()),
            ScriptedReply::Failure { error } => Err(ProviderError::Scripted(error.clone())),
        }
    }
}
