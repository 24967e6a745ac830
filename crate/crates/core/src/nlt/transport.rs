use std::time::Duration;

use serde_json::{json, Value};

/// Environment variable holding the bearer token for the chat endpoint.
pub const API_KEY_ENV: &str = "HISTCAD_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    /// Worth retrying: network failures, HTTP 429 and 5xx.
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("request rejected: {0}")]
    Fatal(String),
}

impl TransportError {
    pub fn is_transient(&self) -> bool {
        matches!(self, TransportError::Transient(_))
    }
}

/// Minimal chat-completion contract: one user message in, one text out.
pub trait ChatTransport: Send + Sync {
    /// Model identifier recorded with each annotation.
    fn model(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, TransportError>;
}

/// Exponential backoff: attempt `k` (from 0) waits `base_delay * 2^k` before retrying.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }

    /// Runs `f` until it succeeds, fails permanently, or attempts run out.
    /// Returns the last error and the number of attempts made.
    pub fn run<T>(&self, mut f: impl FnMut() -> Result<T, TransportError>) -> Result<T, (TransportError, u32)> {
        let attempts = self.attempts.max(1);
        let mut k = 0;
        loop {
            match f() {
                Ok(v) => return Ok(v),
                Err(e) if e.is_transient() && k + 1 < attempts => {
                    std::thread::sleep(self.delay(k));
                    k += 1;
                }
                Err(e) => return Err((e, k + 1)),
            }
        }
    }
}

/// OpenAI-style chat endpoint over HTTP.
pub struct HttpTransport {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(300)))
            .build()
            .into();
        HttpTransport { endpoint: endpoint.into(), model: model.into(), api_key, agent }
    }

    /// Reads the key from `HISTCAD_API_KEY` when set.
    pub fn from_env(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self::new(endpoint, model, std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()))
    }
}

/// Text of the first choice in a chat-completion response.
fn first_choice(body: &Value) -> Option<String> {
    body.pointer("/choices/0/message/content").and_then(Value::as_str).map(str::to_string)
}

impl ChatTransport for HttpTransport {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str) -> Result<String, TransportError> {
        let body = json!({"model": self.model, "messages": [{"role": "user", "content": prompt}]});
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send(body.to_string()).map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| TransportError::Transient(e.to_string()))?;
        match status {
            200..=299 => {}
            429 | 500..=599 => return Err(TransportError::Transient(format!("HTTP {status}"))),
            _ => return Err(TransportError::Fatal(format!("HTTP {status}: {}", text.trim()))),
        }
        let value: Value =
            serde_json::from_str(&text).map_err(|e| TransportError::Fatal(format!("malformed response: {e}")))?;
        first_choice(&value).ok_or_else(|| TransportError::Fatal("response has no first choice".into()))
    }
}

/// Offline transport answering from a closure.
pub struct MockTransport<F> {
    model: String,
    respond: F,
}

impl<F> MockTransport<F>
where
    F: Fn(&str) -> Result<String, TransportError> + Send + Sync,
{
    pub fn new(model: impl Into<String>, respond: F) -> Self {
        MockTransport { model: model.into(), respond }
    }
}

impl<F> ChatTransport for MockTransport<F>
where
    F: Fn(&str) -> Result<String, TransportError> + Send + Sync,
{
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str) -> Result<String, TransportError> {
        (self.respond)(prompt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_choice_extraction() {
        let v = json!({"choices": [{"message": {"role": "assistant", "content": "a bracket"}}]});
        assert_eq!(first_choice(&v).as_deref(), Some("a bracket"));
        assert_eq!(first_choice(&json!({"choices": []})), None);
    }

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy { attempts: 3, base_delay: Duration::from_millis(10) };
        assert_eq!(p.delay(0), Duration::from_millis(10));
        assert_eq!(p.delay(2), Duration::from_millis(40));
    }

    #[test]
    fn fatal_errors_are_not_retried() {
        let p = RetryPolicy { attempts: 3, base_delay: Duration::ZERO };
        let mut calls = 0;
        let r: Result<(), _> = p.run(|| {
            calls += 1;
            Err(TransportError::Fatal("HTTP 401".into()))
        });
        assert_eq!(r.unwrap_err().1, 1);
        assert_eq!(calls, 1);
    }
}
