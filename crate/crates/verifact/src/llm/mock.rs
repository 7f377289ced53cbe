//! Transcript-driven mock chat client.
//!
//! A transcript is JSONL, one scripted exchange per line:
//!
//! ```json
//! {"prompt_sha256": "9f86d0…", "response": "Yes"}
//! {"prompt": "full prompt text", "response": "No", "fail_times": 2, "failure": "timeout"}
//! ```
//!
//! Prompts are keyed by the SHA-256 of their full text, so transcripts stay
//! readable even when prompts run long. A record may carry the prompt text
//! instead of (or alongside) the hash; when both appear they must agree.
//! `fail_times` makes the first N calls for that prompt fail with the given
//! transient `failure` kind before the response is served, which is how
//! retry behavior is exercised without a network.
//!
//! The client is referentially transparent apart from scripted failures:
//! the same prompt always produces the same response. Prompts with no
//! scripted response fail with [`LlmError::Unscripted`] rather than
//! inventing text.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatClient, CompletionParams, LlmError, PromptText};

/// Hex SHA-256 of a prompt's full text, the transcript key.
pub fn prompt_sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Build one transcript line scripting `response` for `prompt`.
///
/// The line carries both the hash and the readable prompt text.
pub fn transcript_line(prompt: &str, response: &str) -> String {
    serde_json::to_string(&TranscriptRecord {
        prompt_sha256: Some(prompt_sha256(prompt)),
        prompt: Some(prompt.to_string()),
        response: response.to_string(),
        fail_times: None,
        failure: None,
    })
    .expect("transcript records always serialize")
}

#[derive(Debug, thiserror::Error)]
pub enum MockError {
    #[error("failed to read transcript {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("transcript line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("transcript line {line}: record needs a prompt or a prompt_sha256")]
    MissingKey { line: usize },
    #[error("transcript line {line}: prompt text hashes to {actual}, not the declared {declared}")]
    HashMismatch {
        line: usize,
        declared: String,
        actual: String,
    },
    #[error("transcript line {line}: conflicting script for prompt {hash}")]
    Conflict { line: usize, hash: String },
    #[error("transcript line {line}: unknown failure kind {kind:?}")]
    UnknownFailure { line: usize, kind: String },
}

/// Transient failure kinds a transcript can script.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockFailure {
    Transport,
    Timeout,
    RateLimited,
    Server,
}

impl MockFailure {
    fn from_kind(kind: &str) -> Option<Self> {
        match kind {
            "transport" => Some(MockFailure::Transport),
            "timeout" => Some(MockFailure::Timeout),
            "rate_limited" => Some(MockFailure::RateLimited),
            "server" => Some(MockFailure::Server),
            _ => None,
        }
    }

    fn to_error(self) -> LlmError {
        match self {
            MockFailure::Transport => LlmError::Transport("scripted failure".to_string()),
            MockFailure::Timeout => LlmError::Timeout,
            MockFailure::RateLimited => LlmError::RateLimited,
            MockFailure::Server => LlmError::Server { status: 503 },
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TranscriptRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    prompt_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prompt: Option<String>,
    response: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    fail_times: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct MockEntry {
    response: String,
    fail_times: u32,
    failure: MockFailure,
}

/// Deterministic [`ChatClient`] backed by a transcript.
///
/// Instruments itself: total calls, the hash sequence of every prompt seen,
/// and the peak number of concurrently in-flight calls. An optional delay
/// holds each call open long enough for concurrency to be observable.
#[derive(Debug)]
pub struct MockClient {
    entries: HashMap<String, MockEntry>,
    failures_served: Mutex<HashMap<String, u32>>,
    call_log: Mutex<Vec<String>>,
    total_calls: AtomicU64,
    in_flight: AtomicU64,
    peak_in_flight: AtomicU64,
    delay: Option<Duration>,
}

impl MockClient {
    pub fn builder() -> MockClientBuilder {
        MockClientBuilder {
            entries: HashMap::new(),
            delay: None,
        }
    }

    pub fn from_transcript_path(path: impl AsRef<Path>) -> Result<Self, MockError> {
        let path = path.as_ref();
        let contents = std::fs::read_to_string(path).map_err(|source| MockError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_transcript_str(&contents)
    }

    pub fn from_transcript_str(transcript: &str) -> Result<Self, MockError> {
        let mut entries: HashMap<String, MockEntry> = HashMap::new();
        for (idx, line) in transcript.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: TranscriptRecord = serde_json::from_str(line)
                .map_err(|source| MockError::Parse {
                    line: line_no,
                    source,
                })?;

            let hash = match (&record.prompt_sha256, &record.prompt) {
                (Some(declared), Some(text)) => {
                    let actual = prompt_sha256(text);
                    if *declared != actual {
                        return Err(MockError::HashMismatch {
                            line: line_no,
                            declared: declared.clone(),
                            actual,
                        });
                    }
                    actual
                }
                (Some(declared), None) => declared.clone(),
                (None, Some(text)) => prompt_sha256(text),
                (None, None) => return Err(MockError::MissingKey { line: line_no }),
            };

            let failure = match record.failure.as_deref() {
                None => MockFailure::Transport,
                Some(kind) => MockFailure::from_kind(kind).ok_or(MockError::UnknownFailure {
                    line: line_no,
                    kind: kind.to_string(),
                })?,
            };
            // naming a failure kind without a count means fail once
            let fail_times = record
                .fail_times
                .unwrap_or(u32::from(record.failure.is_some()));
            let entry = MockEntry {
                response: record.response,
                fail_times,
                failure,
            };
            if let Some(existing) = entries.get(&hash) {
                if *existing != entry {
                    return Err(MockError::Conflict {
                        line: line_no,
                        hash,
                    });
                }
            } else {
                entries.insert(hash, entry);
            }
        }
        Ok(Self::from_entries(entries, None))
    }

    fn from_entries(entries: HashMap<String, MockEntry>, delay: Option<Duration>) -> Self {
        Self {
            entries,
            failures_served: Mutex::new(HashMap::new()),
            call_log: Mutex::new(Vec::new()),
            total_calls: AtomicU64::new(0),
            in_flight: AtomicU64::new(0),
            peak_in_flight: AtomicU64::new(0),
            delay,
        }
    }

    pub fn total_calls(&self) -> u64 {
        self.total_calls.load(Ordering::SeqCst)
    }

    pub fn peak_in_flight(&self) -> u64 {
        self.peak_in_flight.load(Ordering::SeqCst)
    }

    /// Prompt hashes in the order calls arrived.
    pub fn call_log(&self) -> Vec<String> {
        self.call_log.lock().expect("call log lock").clone()
    }

    /// How many calls have been made for one specific prompt text.
    pub fn calls_for(&self, prompt_text: &str) -> usize {
        let hash = prompt_sha256(prompt_text);
        self.call_log
            .lock()
            .expect("call log lock")
            .iter()
            .filter(|h| **h == hash)
            .count()
    }
}

pub struct MockClientBuilder {
    entries: HashMap<String, MockEntry>,
    delay: Option<Duration>,
}

impl MockClientBuilder {
    /// Script `response` for `prompt`. Replaces any earlier script for the
    /// same prompt.
    pub fn script(mut self, prompt: &str, response: &str) -> Self {
        self.entries.insert(
            prompt_sha256(prompt),
            MockEntry {
                response: response.to_string(),
                fail_times: 0,
                failure: MockFailure::Transport,
            },
        );
        self
    }

    /// Script `response` for `prompt`, preceded by `fail_times` scripted
    /// transient failures.
    pub fn script_failing(
        mut self,
        prompt: &str,
        response: &str,
        fail_times: u32,
        failure: MockFailure,
    ) -> Self {
        self.entries.insert(
            prompt_sha256(prompt),
            MockEntry {
                response: response.to_string(),
                fail_times,
                failure,
            },
        );
        self
    }

    /// Hold every call open for `delay` before responding.
    pub fn delay(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }

    pub fn build(self) -> MockClient {
        MockClient::from_entries(self.entries, self.delay)
    }
}

#[async_trait::async_trait]
impl ChatClient for MockClient {
    async fn complete_once(
        &self,
        prompt: &PromptText,
        _params: &CompletionParams,
    ) -> Result<String, LlmError> {
        let hash = prompt_sha256(&prompt.text);
        self.total_calls.fetch_add(1, Ordering::SeqCst);
        self.call_log
            .lock()
            .expect("call log lock")
            .push(hash.clone());

        let now_in_flight = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak_in_flight.fetch_max(now_in_flight, Ordering::SeqCst);
        if let Some(delay) = self.delay {
            tokio::time::sleep(delay).await;
        }

        let result = match self.entries.get(&hash) {
            None => Err(LlmError::Unscripted {
                prompt_sha256: hash,
            }),
            Some(entry) => {
                let mut served = self.failures_served.lock().expect("failure counter lock");
                let count = served.entry(hash).or_insert(0);
                if *count < entry.fail_times {
                    *count += 1;
                    Err(entry.failure.to_error())
                } else {
                    Ok(entry.response.clone())
                }
            }
        };
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{answer_prompt, complete};

    fn fast_params() -> CompletionParams {
        CompletionParams {
            retry_limit: 3,
            retry_backoff: Duration::from_millis(1),
            ..CompletionParams::default()
        }
    }

    #[tokio::test]
    async fn scripted_prompts_get_their_response_every_time() {
        let prompt = answer_prompt("what is water");
        let client = MockClient::builder().script(&prompt.text, "H2O").build();
        for _ in 0..3 {
            let got = client.complete_once(&prompt, &fast_params()).await.unwrap();
            assert_eq!(got, "H2O");
        }
        assert_eq!(client.total_calls(), 3);
        assert_eq!(client.calls_for(&prompt.text), 3);
    }

    #[tokio::test]
    async fn unscripted_prompts_fail_with_their_hash() {
        let prompt = answer_prompt("unexpected");
        let client = MockClient::builder().build();
        let err = client
            .complete_once(&prompt, &fast_params())
            .await
            .unwrap_err();
        match err {
            LlmError::Unscripted { prompt_sha256: h } => {
                assert_eq!(h, prompt_sha256(&prompt.text));
            }
            other => panic!("unexpected error: {other}"),
        }
        assert!(!err_is_transient_helper());
    }

    fn err_is_transient_helper() -> bool {
        LlmError::Unscripted {
            prompt_sha256: String::new(),
        }
        .is_transient()
    }

    #[tokio::test]
    async fn scripted_failures_are_served_before_the_response() {
        let prompt = answer_prompt("flaky");
        let client = MockClient::builder()
            .script_failing(&prompt.text, "finally", 2, MockFailure::Timeout)
            .build();
        let got = complete(&client, &prompt, &fast_params()).await.unwrap();
        assert_eq!(got, "finally");
        assert_eq!(client.total_calls(), 3);
    }

    #[test]
    fn transcript_lines_round_trip() {
        let prompt = answer_prompt("round trip");
        let transcript = format!(
            "{}\n{}\n",
            transcript_line(&prompt.text, "ok"),
            transcript_line("another prompt", "fine")
        );
        let client = MockClient::from_transcript_str(&transcript).unwrap();
        assert_eq!(client.entries.len(), 2);
        assert_eq!(
            client.entries[&prompt_sha256(&prompt.text)].response,
            "ok"
        );
    }

    #[test]
    fn hash_only_records_are_accepted() {
        let transcript = format!(
            "{{\"prompt_sha256\":\"{}\",\"response\":\"Yes\"}}\n",
            prompt_sha256("secret prompt")
        );
        let client = MockClient::from_transcript_str(&transcript).unwrap();
        assert_eq!(client.entries.len(), 1);
    }

    #[test]
    fn mismatched_hash_and_prompt_are_rejected() {
        let transcript = format!(
            "{{\"prompt_sha256\":\"{}\",\"prompt\":\"other text\",\"response\":\"x\"}}\n",
            prompt_sha256("one text")
        );
        let err = MockClient::from_transcript_str(&transcript).unwrap_err();
        assert!(matches!(err, MockError::HashMismatch { line: 1, .. }));
    }

    #[test]
    fn conflicting_scripts_are_rejected_but_identical_duplicates_pass() {
        let a = transcript_line("p", "same");
        let conflicting = format!("{a}\n{}\n", transcript_line("p", "different"));
        assert!(matches!(
            MockClient::from_transcript_str(&conflicting),
            Err(MockError::Conflict { line: 2, .. })
        ));
        let duplicated = format!("{a}\n{a}\n");
        assert!(MockClient::from_transcript_str(&duplicated).is_ok());
    }

    #[test]
    fn records_without_prompt_or_hash_are_rejected() {
        let err = MockClient::from_transcript_str("{\"response\":\"x\"}\n").unwrap_err();
        assert!(matches!(err, MockError::MissingKey { line: 1 }));
    }

    #[test]
    fn unknown_failure_kinds_are_rejected() {
        let transcript = "{\"prompt\":\"p\",\"response\":\"x\",\"failure\":\"eclipse\"}\n";
        let err = MockClient::from_transcript_str(transcript).unwrap_err();
        match err {
            MockError::UnknownFailure { line, kind } => {
                assert_eq!(line, 1);
                assert_eq!(kind, "eclipse");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn garbage_transcript_lines_are_parse_errors() {
        let transcript = format!("{}\nnot json at all\n", transcript_line("p", "x"));
        assert!(matches!(
            MockClient::from_transcript_str(&transcript),
            Err(MockError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn failure_kind_without_count_fails_once() {
        let transcript = "{\"prompt\":\"p\",\"response\":\"x\",\"failure\":\"server\"}\n";
        let client = MockClient::from_transcript_str(transcript).unwrap();
        let entry = &client.entries[&prompt_sha256("p")];
        assert_eq!(entry.fail_times, 1);
        assert_eq!(entry.failure, MockFailure::Server);
    }

    #[tokio::test]
    async fn concurrent_calls_are_observable_through_the_peak_gauge() {
        use futures::StreamExt;
        let prompt = answer_prompt("concurrent");
        let client = MockClient::builder()
            .script(&prompt.text, "ok")
            .delay(Duration::from_millis(15))
            .build();
        let params = fast_params();
        futures::stream::iter((0..6).map(|_| client.complete_once(&prompt, &params)))
            .buffered(2)
            .collect::<Vec<_>>()
            .await;
        assert_eq!(client.total_calls(), 6);
        assert!(client.peak_in_flight() <= 2);
        assert!(client.peak_in_flight() >= 1);
    }
}
