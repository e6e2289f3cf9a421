//! Model backends: the scripted mock used for offline runs and tests, and
//! a chat-completions HTTP adapter for OpenAI-compatible providers.

use crate::conditions::ConditionId;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

/// One completion request. Trial identity fields ride along so scripted
/// mocks can key on them; live adapters ignore them.
#[derive(Debug, Clone)]
pub struct CompletionRequest<'a> {
    pub system_prompt: &'a str,
    pub user_prompt: &'a str,
    pub temperature: f64,
    pub seed: u64,
    pub max_tokens: u32,
    pub item_id: &'a str,
    pub condition: ConditionId,
    pub trial_index: u32,
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub finish_reason: String,
}

/// Backend failure; `retryable` drives the transport retry loop.
#[derive(Debug, Clone)]
pub struct BackendError {
    pub message: String,
    pub retryable: bool,
}

impl std::fmt::Display for BackendError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> std::result::Result<Completion, BackendError>;
}

// ---------------------------------------------------------------------------
// Scripted mock
// ---------------------------------------------------------------------------

/// One scripted response. Omitted key fields act as wildcards; the most
/// specific matching entry wins, earliest entry breaking ties.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
    #[serde(default)]
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<String>,
    /// Simulate a provider failure for this key.
    #[serde(default)]
    pub error: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockScript {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_response: Option<String>,
    /// Per-request latency, for exercising concurrency and interruption.
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(default)]
    pub responses: Vec<MockEntry>,
}

/// Deterministic scripted backend.
pub struct MockBackend {
    script: MockScript,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        MockBackend { script }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<MockBackend> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let script: MockScript = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.display().to_string(),
            source,
        })?;
        if script.schema_version != crate::SCHEMA_VERSION {
            return Err(Error::Invalid(format!(
                "mock script schema_version {} unsupported",
                script.schema_version
            )));
        }
        Ok(MockBackend::new(script))
    }

    fn lookup(&self, request: &CompletionRequest<'_>) -> Option<&MockEntry> {
        let mut best: Option<(usize, &MockEntry)> = None;
        for entry in &self.script.responses {
            let mut specificity = 0usize;
            let mut matches = true;
            let mut check_str = |field: &Option<String>, value: &str| {
                if let Some(want) = field {
                    if want == value {
                        specificity += 1;
                    } else {
                        matches = false;
                    }
                }
            };
            check_str(&entry.item_id, request.item_id);
            if let Some(cond) = entry.condition {
                if cond == request.condition {
                    specificity += 1;
                } else {
                    matches = false;
                }
            }
            if let Some(t) = entry.trial_index {
                if t == request.trial_index {
                    specificity += 1;
                } else {
                    matches = false;
                }
            }
            if let Some(a) = entry.attempt {
                if a == request.attempt {
                    specificity += 1;
                } else {
                    matches = false;
                }
            }
            if matches && best.map_or(true, |(s, _)| specificity > s) {
                best = Some((specificity, entry));
            }
        }
        best.map(|(_, e)| e)
    }
}

impl Backend for MockBackend {
    fn complete(
        &self,
        request: &CompletionRequest<'_>,
    ) -> std::result::Result<Completion, BackendError> {
        if self.script.latency_ms > 0 {
            std::thread::sleep(Duration::from_millis(self.script.latency_ms));
        }
        if let Some(entry) = self.lookup(request) {
            if entry.error {
                return Err(BackendError {
                    message: format!("scripted error for item {}", request.item_id),
                    retryable: false,
                });
            }
            return Ok(Completion {
                text: entry.response.clone(),
                finish_reason: entry.finish_reason.clone().unwrap_or_else(|| "stop".into()),
            });
        }
        match &self.script.default_response {
            Some(text) => Ok(Completion {
                text: text.clone(),
                finish_reason: "stop".into(),
            }),
            None => Err(BackendError {
                message: format!(
                    "mock script has no entry for ({}, {}, {}, {}) and no default_response",
                    request.item_id, request.condition, request.trial_index, request.attempt
                ),
                retryable: false,
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// OpenAI-compatible chat completions over HTTP
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
    seed: u64,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

/// Chat-completions adapter for providers speaking the OpenAI wire format.
/// The API key arrives via an environment variable named in the config and
/// never touches persisted artifacts.
pub struct OpenAiChatBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl OpenAiChatBackend {
    pub fn new(endpoint: String, model: String, api_key: Option<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(180))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(OpenAiChatBackend {
            endpoint,
            model,
            api_key,
            client,
        })
    }
}

impl Backend for OpenAiChatBackend {
    fn complete(
        &self,
        request: &CompletionRequest<'_>,
    ) -> std::result::Result<Completion, BackendError> {
        let body = ChatRequest {
            model: &self.model,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: request.system_prompt,
                },
                ChatMessage {
                    role: "user",
                    content: request.user_prompt,
                },
            ],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
            seed: request.seed,
        };
        let mut http = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let response = http.send().map_err(|e| BackendError {
            message: format!("transport: {e}"),
            retryable: true,
        })?;
        let status = response.status();
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            let text = response.text().unwrap_or_default();
            return Err(BackendError {
                message: format!("http {status}: {}", text.chars().take(200).collect::<String>()),
                retryable,
            });
        }
        let parsed: ChatResponse = response.json().map_err(|e| BackendError {
            message: format!("malformed completion payload: {e}"),
            retryable: false,
        })?;
        let choice = parsed.choices.into_iter().next().ok_or(BackendError {
            message: "completion payload has no choices".into(),
            retryable: false,
        })?;
        Ok(Completion {
            text: choice.message.content.unwrap_or_default(),
            finish_reason: choice.finish_reason.unwrap_or_else(|| "stop".into()),
        })
    }
}

/// Named backends for a run.
pub type BackendMap = BTreeMap<String, std::sync::Arc<dyn Backend>>;

#[cfg(test)]
mod tests {
    use super::*;

    fn request<'a>(item: &'a str, condition: ConditionId, trial: u32, attempt: u32) -> CompletionRequest<'a> {
        CompletionRequest {
            system_prompt: "sys",
            user_prompt: "user",
            temperature: 0.0,
            seed: 1,
            max_tokens: 64,
            item_id: item,
            condition,
            trial_index: trial,
            attempt,
        }
    }

    #[test]
    fn most_specific_entry_wins() {
        let script = MockScript {
            schema_version: 1,
            default_response: Some("default".into()),
            latency_ms: 0,
            responses: vec![
                MockEntry {
                    item_id: Some("i1".into()),
                    condition: None,
                    trial_index: None,
                    attempt: None,
                    response: "item-wide".into(),
                    finish_reason: None,
                    error: false,
                },
                MockEntry {
                    item_id: Some("i1".into()),
                    condition: Some(ConditionId::EPrime),
                    trial_index: Some(2),
                    attempt: Some(0),
                    response: "exact".into(),
                    finish_reason: None,
                    error: false,
                },
            ],
        };
        let backend = MockBackend::new(script);
        let exact = backend.complete(&request("i1", ConditionId::EPrime, 2, 0)).unwrap();
        assert_eq!(exact.text, "exact");
        let wide = backend.complete(&request("i1", ConditionId::Control, 0, 0)).unwrap();
        assert_eq!(wide.text, "item-wide");
        let fallback = backend.complete(&request("i9", ConditionId::Control, 0, 0)).unwrap();
        assert_eq!(fallback.text, "default");
    }

    #[test]
    fn scripted_error_is_not_retryable() {
        let script = MockScript {
            schema_version: 1,
            default_response: None,
            latency_ms: 0,
            responses: vec![MockEntry {
                item_id: Some("i1".into()),
                condition: None,
                trial_index: None,
                attempt: None,
                response: String::new(),
                finish_reason: None,
                error: true,
            }],
        };
        let backend = MockBackend::new(script);
        let err = backend.complete(&request("i1", ConditionId::Control, 0, 0)).unwrap_err();
        assert!(!err.retryable);
        // Missing key without a default is a configuration bug, not a trial result.
        let err = backend.complete(&request("i2", ConditionId::Control, 0, 0)).unwrap_err();
        assert!(err.message.contains("no entry"));
    }

    #[test]
    fn mock_is_deterministic() {
        let script = MockScript {
            schema_version: 1,
            default_response: Some("fixed".into()),
            latency_ms: 0,
            responses: vec![],
        };
        let backend = MockBackend::new(script);
        let a = backend.complete(&request("i", ConditionId::Control, 1, 0)).unwrap();
        let b = backend.complete(&request("i", ConditionId::Control, 1, 0)).unwrap();
        assert_eq!(a, b);
    }
}
