//! OpenAI-compatible chat completion client.

use serde::Deserialize;
use serde_json::json;
use tokio::sync::Semaphore;

use super::{ChatClient, CompletionParams, LlmError, PromptText};

/// Environment variable holding the bearer token for [`HttpClient`].
pub const API_KEY_ENV: &str = "VERIFACT_API_KEY";

/// Default chat completions endpoint.
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

/// Sends prompts to any endpoint speaking the OpenAI chat completions
/// protocol. Each prompt goes out as a single user message. An internal
/// semaphore caps concurrent requests independently of how many futures the
/// caller spawns.
pub struct HttpClient {
    http: reqwest::Client,
    endpoint: String,
    api_key: String,
    permits: Semaphore,
}

impl std::fmt::Debug for HttpClient {
    // the API key stays out of debug output
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpClient")
            .field("endpoint", &self.endpoint)
            .finish_non_exhaustive()
    }
}

impl HttpClient {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: impl Into<String>,
        max_in_flight: usize,
    ) -> Self {
        Self {
            http: reqwest::Client::new(),
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            permits: Semaphore::new(max_in_flight.max(1)),
        }
    }

    /// Build a client taking the API key from [`API_KEY_ENV`].
    pub fn from_env(endpoint: impl Into<String>, max_in_flight: usize) -> Result<Self, LlmError> {
        let api_key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or(LlmError::MissingApiKey(API_KEY_ENV))?;
        Ok(Self::new(endpoint, api_key, max_in_flight))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[async_trait::async_trait]
impl ChatClient for HttpClient {
    async fn complete_once(
        &self,
        prompt: &PromptText,
        params: &CompletionParams,
    ) -> Result<String, LlmError> {
        let _permit = self
            .permits
            .acquire()
            .await
            .expect("completion semaphore is never closed");

        let body = json!({
            "model": params.model_id,
            "temperature": params.temperature,
            "messages": [{ "role": "user", "content": prompt.text }],
        });

        let response = self
            .http
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .timeout(params.timeout)
            .json(&body)
            .send()
            .await
            .map_err(|e| {
                if e.is_timeout() {
                    LlmError::Timeout
                } else {
                    LlmError::Transport(e.to_string())
                }
            })?;

        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(LlmError::Auth { status }),
            429 => return Err(LlmError::RateLimited),
            500..=599 => return Err(LlmError::Server { status }),
            _ => {
                let message = response.text().await.unwrap_or_default();
                let message = message.chars().take(200).collect();
                return Err(LlmError::Api { status, message });
            }
        }

        let parsed: ChatResponse = response.json().await.map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::MalformedResponse(e.to_string())
            }
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::MalformedResponse("response carries no choices".to_string()))
    }
}
