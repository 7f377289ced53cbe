//! Chat model access: prompt construction, completion, and response parsing.
//!
//! [`ChatClient`] is the one-shot transport. [`complete`] wraps it with the
//! retry policy: transient failures (transport, timeout, rate limiting,
//! server errors) back off exponentially and retry up to
//! [`CompletionParams::retry_limit`] times; everything else fails
//! immediately. Two implementations ship here, the OpenAI-compatible
//! [`HttpClient`] and the transcript-driven [`MockClient`] used for
//! deterministic offline runs.

mod client;
mod label;
mod mock;
mod template;

pub use client::{HttpClient, API_KEY_ENV, DEFAULT_ENDPOINT};
pub use label::{parse_label, UnparseableResponse, VerificationLabel};
pub use mock::{prompt_sha256, transcript_line, MockClient, MockError, MockFailure};
pub use template::{
    answer_prompt, classify_prompt, reader_prompt, PromptText, TemplateId, ANSWER_TEMPLATE,
    CLASSIFY_TEMPLATE, READER_TEMPLATE,
};

use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("rate limited (HTTP 429)")]
    RateLimited,
    #[error("server error (HTTP {status})")]
    Server { status: u16 },
    #[error("authentication rejected (HTTP {status}); check {API_KEY_ENV}")]
    Auth { status: u16 },
    #[error("environment variable {0} is not set")]
    MissingApiKey(&'static str),
    #[error("API request rejected (HTTP {status}): {message}")]
    Api { status: u16, message: String },
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
    #[error("no scripted response for prompt {prompt_sha256}")]
    Unscripted { prompt_sha256: String },
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted {
        attempts: usize,
        #[source]
        last: Box<LlmError>,
    },
}

impl LlmError {
    /// Whether retrying the same request could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        matches!(
            self,
            LlmError::Transport(_)
                | LlmError::Timeout
                | LlmError::RateLimited
                | LlmError::Server { .. }
        )
    }
}

/// Decoding and retry settings for one logical completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub model_id: String,
    pub temperature: f64,
    /// Upper bound on concurrent requests in batch runs.
    pub max_in_flight: usize,
    /// Retries after the first attempt, transient failures only.
    pub retry_limit: usize,
    /// Backoff before the first retry; doubles on each subsequent one.
    pub retry_backoff: Duration,
    pub timeout: Duration,
}

impl Default for CompletionParams {
    fn default() -> Self {
        Self {
            model_id: "gpt-3.5-turbo".to_string(),
            temperature: 0.0,
            max_in_flight: 4,
            retry_limit: 3,
            retry_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(60),
        }
    }
}

/// A chat model that can answer one prompt at a time.
///
/// Implementations perform a single attempt; retry policy lives in
/// [`complete`]. Well-behaved implementations are referentially transparent
/// at temperature 0: the same prompt yields the same response.
#[async_trait::async_trait]
pub trait ChatClient: Send + Sync {
    async fn complete_once(
        &self,
        prompt: &PromptText,
        params: &CompletionParams,
    ) -> Result<String, LlmError>;
}

/// Complete `prompt`, retrying transient failures with exponential backoff.
///
/// After `retry_limit` failed retries the last transient error is wrapped in
/// [`LlmError::RetriesExhausted`]. Non-transient errors are returned as-is
/// on the first occurrence.
pub async fn complete(
    client: &dyn ChatClient,
    prompt: &PromptText,
    params: &CompletionParams,
) -> Result<String, LlmError> {
    let mut retries = 0usize;
    loop {
        match client.complete_once(prompt, params).await {
            Ok(text) => return Ok(text),
            Err(err) if err.is_transient() && retries < params.retry_limit => {
                let backoff = params.retry_backoff * 2u32.saturating_pow(retries as u32);
                tokio::time::sleep(backoff).await;
                retries += 1;
            }
            Err(err) if err.is_transient() => {
                return Err(LlmError::RetriesExhausted {
                    attempts: retries + 1,
                    last: Box::new(err),
                })
            }
            Err(err) => return Err(err),
        }
    }
}
