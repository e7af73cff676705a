use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::prompt::{build_prompt, ChatMessage, PromptSpec};
use super::verdict::{parse_verdict, Verdict};
use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles after every further failure.
    pub backoff_base_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_base_ms: 250,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    /// Base URL; requests go to `{endpoint}/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub timeout_secs: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            temperature: 0.0,
            max_in_flight: 8,
            retry: RetryPolicy::default(),
            timeout_secs: 120,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature != 0.0 {
            return Err(Error::Validation(format!("temperature must be 0, got {}", self.temperature)));
        }
        if self.max_in_flight == 0 || self.retry.max_attempts == 0 {
            return Err(Error::Validation("max_in_flight and max_attempts must be at least 1".into()));
        }
        Ok(())
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.endpoint.trim_end_matches('/'))
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Reply text with transport bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub content: String,
    pub attempts: u32,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classified {
    pub messages: Vec<ChatMessage>,
    pub verdict: Verdict,
    pub attempts: u32,
    pub latency_ms: u64,
}

enum Failure {
    Retryable(String),
    Fatal(String),
}

#[derive(Debug, Clone)]
pub struct LlmClient {
    http: reqwest::Client,
    config: LlmConfig,
    api_key: Option<String>,
}

impl LlmClient {
    /// Client reading the API key (if any) from `OPENAI_API_KEY`.
    pub fn new(config: LlmConfig) -> Result<Self> {
        Self::with_api_key(config, std::env::var(API_KEY_ENV).ok())
    }

    pub fn with_api_key(config: LlmConfig, api_key: Option<String>) -> Result<Self> {
        config.validate()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self { http, config, api_key })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    async fn attempt(&self, messages: &[ChatMessage]) -> std::result::Result<String, Failure> {
        let mut req = self.http.post(self.config.url()).json(&ChatRequest {
            model: &self.config.model,
            temperature: self.config.temperature,
            messages,
        });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                Failure::Retryable(e.to_string())
            } else {
                Failure::Fatal(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Failure::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(Failure::Fatal(format!("HTTP {status}: {body}")));
        }
        let body: ChatResponse = resp
            .json()
            .await
            .map_err(|e| Failure::Fatal(format!("bad response body: {e}")))?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.message.content.unwrap_or_default())
            .ok_or_else(|| Failure::Fatal("response has no choices".into()))
    }

    /// Send one chat completion, retrying transient failures with
    /// exponential backoff.
    pub async fn complete(&self, messages: &[ChatMessage]) -> Result<Completion> {
        let start = Instant::now();
        let policy = self.config.retry;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(messages).await {
                Ok(content) => {
                    return Ok(Completion {
                        content,
                        attempts,
                        latency_ms: start.elapsed().as_millis() as u64,
                    })
                }
                Err(Failure::Fatal(message)) => return Err(Error::Transport { attempts, message }),
                Err(Failure::Retryable(message)) => {
                    if attempts >= policy.max_attempts {
                        return Err(Error::Transport { attempts, message });
                    }
                    let delay = policy.backoff_base_ms.saturating_mul(1 << (attempts - 1).min(16));
                    tokio::time::sleep(Duration::from_millis(delay)).await;
                }
            }
        }
    }

    /// Render `spec`, send it and parse the verdict.
    pub async fn classify_pair(&self, spec: &PromptSpec) -> Result<Classified> {
        spec.validate()?;
        let messages = build_prompt(spec);
        let done = self.complete(&messages).await?;
        Ok(Classified {
            verdict: parse_verdict(&done.content),
            messages,
            attempts: done.attempts,
            latency_ms: done.latency_ms,
        })
    }
}
