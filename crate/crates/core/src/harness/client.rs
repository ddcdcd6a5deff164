//! Model backends: an OpenAI-compatible HTTP endpoint and in-process mocks.

use std::time::Duration;

use futures::future::BoxFuture;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::harness::mock::{mock_response, MockKind};
use crate::harness::request::{PreparedRequest, PromptMode};
use crate::taskgen::item::BenchmarkItem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallError {
    /// Rate limits, server errors, timeouts and dropped connections.
    Retryable(String),
    Fatal(String),
}

impl std::fmt::Display for CallError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CallError::Retryable(m) => write!(f, "retryable: {m}"),
            CallError::Fatal(m) => write!(f, "fatal: {m}"),
        }
    }
}

pub trait Backend: Send + Sync {
    fn complete<'a>(
        &'a self,
        item: &'a BenchmarkItem,
        request: &'a PreparedRequest,
    ) -> BoxFuture<'a, std::result::Result<String, CallError>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            initial_backoff_ms: 500,
            max_backoff_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based), doubling each time.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Http {
        base_url: String,
        /// Model name sent to the endpoint.
        model: String,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
    Mock {
        mock: String,
    },
}

fn default_timeout() -> u64 {
    300
}

pub fn build_backend(cfg: &BackendConfig) -> Result<Box<dyn Backend>> {
    match cfg {
        BackendConfig::Http {
            base_url,
            model,
            api_key_env,
            timeout_secs,
        } => {
            let api_key = match api_key_env {
                Some(var) => Some(
                    std::env::var(var).map_err(|_| Error::config(format!("environment variable {var} is not set")))?,
                ),
                None => None,
            };
            Ok(Box::new(HttpBackend::new(base_url, model, api_key, Duration::from_secs(*timeout_secs))?))
        }
        BackendConfig::Mock { mock } => Ok(Box::new(MockBackend(mock.parse()?))),
    }
}

pub struct MockBackend(pub MockKind);

impl Backend for MockBackend {
    fn complete<'a>(
        &'a self,
        item: &'a BenchmarkItem,
        _request: &'a PreparedRequest,
    ) -> BoxFuture<'a, std::result::Result<String, CallError>> {
        let out = mock_response(item, self.0).map_err(|e| CallError::Fatal(e.to_string()));
        Box::pin(async move { out })
    }
}

pub struct HttpBackend {
    client: reqwest::Client,
    base_url: String,
    model: String,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(base_url: &str, model: &str, api_key: Option<String>, timeout: Duration) -> Result<Self> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpBackend {
            client,
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key,
        })
    }

    fn body(&self, request: &PreparedRequest) -> (String, Value) {
        match request.mode {
            PromptMode::Chat => (
                format!("{}/chat/completions", self.base_url),
                json!({
                    "model": self.model,
                    "messages": [{"role": "user", "content": request.prompt}],
                    "temperature": request.temperature,
                    "max_tokens": request.max_tokens,
                }),
            ),
            PromptMode::Completion => (
                format!("{}/completions", self.base_url),
                json!({
                    "model": self.model,
                    "prompt": request.prompt,
                    "temperature": request.temperature,
                    "max_tokens": request.max_tokens,
                }),
            ),
        }
    }
}

/// Text of the first choice in a chat or completion response.
pub fn response_text(body: &Value) -> Option<String> {
    let choice = body.get("choices")?.get(0)?;
    choice
        .get("message")
        .and_then(|m| m.get("content"))
        .or_else(|| choice.get("text"))
        .map(|v| v.as_str().unwrap_or_default().to_string())
}

impl Backend for HttpBackend {
    fn complete<'a>(
        &'a self,
        _item: &'a BenchmarkItem,
        request: &'a PreparedRequest,
    ) -> BoxFuture<'a, std::result::Result<String, CallError>> {
        Box::pin(async move {
            let (url, body) = self.body(request);
            let mut req = self.client.post(&url).json(&body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            let resp = req.send().await.map_err(|e| {
                if e.is_timeout() || e.is_connect() || e.is_request() {
                    CallError::Retryable(e.to_string())
                } else {
                    CallError::Fatal(e.to_string())
                }
            })?;
            let status = resp.status();
            if status.as_u16() == 429 || status.is_server_error() {
                return Err(CallError::Retryable(format!("HTTP {status}")));
            }
            if !status.is_success() {
                let text = resp.text().await.unwrap_or_default();
                return Err(CallError::Fatal(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>())));
            }
            let value: Value = resp
                .json()
                .await
                .map_err(|e| CallError::Retryable(format!("unreadable body: {e}")))?;
            response_text(&value).ok_or_else(|| CallError::Fatal(format!("no choices in response: {value}")))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_attempts: 5,
            initial_backoff_ms: 100,
            max_backoff_ms: 1000,
        };
        let ms: Vec<u128> = (1..=6).map(|a| p.backoff(a).as_millis()).collect();
        assert_eq!(ms, vec![100, 200, 400, 800, 1000, 1000]);
        assert_eq!(p.backoff(200).as_millis(), 1000);
    }

    #[test]
    fn reads_both_response_shapes() {
        let chat = json!({"choices": [{"message": {"role": "assistant", "content": "hi"}}]});
        let comp = json!({"choices": [{"text": "there"}]});
        assert_eq!(response_text(&chat).as_deref(), Some("hi"));
        assert_eq!(response_text(&comp).as_deref(), Some("there"));
        assert_eq!(response_text(&json!({"error": "x"})), None);
    }
}
