//! Batch verification with bounded concurrency, a resume journal, and an
//! answer cache.
//!
//! The journal is append-only JSONL. Every finished record is committed as
//! one line carrying the record plus a configuration fingerprint, so a
//! journal can be shared between runs with different settings without mixing
//! their results. On open, a torn final line (the signature of a crash mid
//! write) is dropped and truncated away; corruption anywhere else is an
//! error, because it means something other than a crash edited the file.
//!
//! The answer cache stores generated answers keyed by question id, model,
//! and temperature. Two runs that differ only in retrieval settings then
//! verify the very same answers, which is what makes their disagreements
//! attributable to retrieval.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Mutex;

use futures::StreamExt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::record::VerificationRecord;
use super::{verify_one, PipelineConfig, Retriever};
use crate::corpus::Question;
use crate::llm::{ChatClient, CompletionParams};

#[derive(Debug, thiserror::Error)]
pub enum JournalError {
    #[error("failed to {action} journal {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("journal {path} line {line} is corrupt: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("failed to {action} answer cache {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("answer cache {path} line {line} is corrupt: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
}

/// The settings that determine a record's content, hashed together so the
/// journal can tell runs apart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigFingerprint {
    pub model_id: String,
    pub temperature: f64,
    pub use_reader: bool,
    pub retriever: String,
}

impl ConfigFingerprint {
    pub fn new(config: &PipelineConfig, retriever: &dyn Retriever) -> Self {
        Self {
            model_id: config.completion.model_id.clone(),
            temperature: config.completion.temperature,
            use_reader: config.use_reader,
            retriever: retriever.descriptor(),
        }
    }
}

/// Hex SHA-256 over the fingerprint's canonical JSON form.
pub fn config_hash(fingerprint: &ConfigFingerprint) -> String {
    let canonical = serde_json::to_string(fingerprint).expect("fingerprints always serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Open `path` for appending JSONL, recovering from a torn final line.
///
/// Returns the surviving complete lines (blank lines dropped) and a file
/// handle positioned at the end. A final line without a newline is kept if
/// it parses as a JSON value (the write completed, the newline did not) and
/// silently truncated away otherwise.
fn open_append_jsonl(path: &Path) -> std::io::Result<(File, Vec<String>)> {
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .write(true)
        .truncate(false)
        .open(path)?;
    let mut contents = String::new();
    file.read_to_string(&mut contents)?;

    let mut lines = Vec::new();
    let mut keep_len = 0usize;
    let mut needs_newline = false;
    let mut offset = 0usize;
    for segment in contents.split_inclusive('\n') {
        offset += segment.len();
        let terminated = segment.ends_with('\n');
        let line = segment.strip_suffix('\n').unwrap_or(segment);
        if line.trim().is_empty() {
            if terminated {
                keep_len = offset;
            }
            continue;
        }
        if terminated {
            lines.push(line.to_string());
            keep_len = offset;
        } else if serde_json::from_str::<serde_json::Value>(line).is_ok() {
            lines.push(line.to_string());
            keep_len = offset;
            needs_newline = true;
        }
        // an unterminated line that is not valid JSON is a torn write; it
        // falls off the end of keep_len and gets truncated below
    }
    file.set_len(keep_len as u64)?;
    file.seek(SeekFrom::End(0))?;
    if needs_newline {
        file.write_all(b"\n")?;
    }
    Ok((file, lines))
}

#[derive(Serialize, Deserialize)]
struct JournalEntry {
    config_hash: String,
    record: serde_json::Value,
}

/// Append-only completion log for resumable batches.
#[derive(Debug)]
pub struct Journal {
    path: String,
    file: Mutex<File>,
    config_hash: String,
    completed: HashMap<String, VerificationRecord>,
}

impl Journal {
    /// Open or create the journal at `path`, loading every record written
    /// under `config_hash`. Records from other configurations are preserved
    /// but invisible.
    pub fn open(path: impl AsRef<Path>, config_hash: &str) -> Result<Self, JournalError> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let (file, lines) = open_append_jsonl(path).map_err(|source| JournalError::Io {
            action: "open",
            path: display.clone(),
            source,
        })?;

        let mut completed = HashMap::new();
        for (idx, line) in lines.iter().enumerate() {
            let entry: JournalEntry =
                serde_json::from_str(line).map_err(|e| JournalError::Corrupt {
                    path: display.clone(),
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            if entry.config_hash != config_hash {
                continue;
            }
            let record = VerificationRecord::from_json_line(&entry.record.to_string()).map_err(
                |e| JournalError::Corrupt {
                    path: display.clone(),
                    line: idx + 1,
                    message: e.to_string(),
                },
            )?;
            completed.insert(record.qid.clone(), record);
        }
        Ok(Self {
            path: display,
            file: Mutex::new(file),
            config_hash: config_hash.to_string(),
            completed,
        })
    }

    /// The record already journaled for `qid` under this configuration.
    pub fn completed(&self, qid: &str) -> Option<&VerificationRecord> {
        self.completed.get(qid)
    }

    pub fn completed_count(&self) -> usize {
        self.completed.len()
    }

    /// Commit one finished record. The line is written and flushed in one
    /// call, holding the file lock for the duration.
    pub fn append(&self, record: &VerificationRecord) -> Result<(), JournalError> {
        let entry = JournalEntry {
            config_hash: self.config_hash.clone(),
            record: serde_json::from_str(&record.to_json_line())
                .expect("records serialize to valid JSON"),
        };
        let mut line = serde_json::to_string(&entry).expect("journal entries always serialize");
        line.push('\n');
        let mut file = self.file.lock().expect("journal file lock");
        file.write_all(line.as_bytes())
            .and_then(|()| file.flush())
            .map_err(|source| JournalError::Io {
                action: "append to",
                path: self.path.clone(),
                source,
            })
    }
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    qid: String,
    model_id: String,
    temperature: f64,
    question: String,
    answer: String,
}

#[derive(Clone)]
struct CachedAnswer {
    question: String,
    answer: String,
}

/// Append-only store of generated answers, shared across configurations.
pub struct AnswerCache {
    path: String,
    file: Mutex<File>,
    entries: Mutex<HashMap<(String, String, u64), CachedAnswer>>,
}

impl AnswerCache {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CacheError> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let (file, lines) = open_append_jsonl(path).map_err(|source| CacheError::Io {
            action: "open",
            path: display.clone(),
            source,
        })?;

        let mut entries = HashMap::new();
        for (idx, line) in lines.iter().enumerate() {
            let parsed: CacheLine =
                serde_json::from_str(line).map_err(|e| CacheError::Corrupt {
                    path: display.clone(),
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            entries.insert(
                (parsed.qid, parsed.model_id, parsed.temperature.to_bits()),
                CachedAnswer {
                    question: parsed.question,
                    answer: parsed.answer,
                },
            );
        }
        Ok(Self {
            path: display,
            file: Mutex::new(file),
            entries: Mutex::new(entries),
        })
    }

    /// The cached answer for this question under these parameters, if the
    /// cached question text still matches. A qid whose question text changed
    /// is treated as a miss rather than served stale.
    pub fn lookup(&self, question: &Question, params: &CompletionParams) -> Option<String> {
        let key = (
            question.qid.clone(),
            params.model_id.clone(),
            params.temperature.to_bits(),
        );
        let entries = self.entries.lock().expect("answer cache lock");
        entries
            .get(&key)
            .filter(|cached| cached.question == question.text)
            .map(|cached| cached.answer.clone())
    }

    /// Record a freshly generated answer, in memory and on disk.
    pub fn store(
        &self,
        question: &Question,
        params: &CompletionParams,
        answer: &str,
    ) -> Result<(), CacheError> {
        let mut line = serde_json::to_string(&CacheLine {
            qid: question.qid.clone(),
            model_id: params.model_id.clone(),
            temperature: params.temperature,
            question: question.text.clone(),
            answer: answer.to_string(),
        })
        .expect("cache lines always serialize");
        line.push('\n');
        {
            let mut file = self.file.lock().expect("answer cache file lock");
            file.write_all(line.as_bytes())
                .and_then(|()| file.flush())
                .map_err(|source| CacheError::Io {
                    action: "append to",
                    path: self.path.clone(),
                    source,
                })?;
        }
        let key = (
            question.qid.clone(),
            params.model_id.clone(),
            params.temperature.to_bits(),
        );
        self.entries.lock().expect("answer cache lock").insert(
            key,
            CachedAnswer {
                question: question.text.clone(),
                answer: answer.to_string(),
            },
        );
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("answer cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// What a batch run did.
#[derive(Debug)]
pub struct BatchOutcome {
    /// One record per input question, in input order.
    pub records: Vec<VerificationRecord>,
    /// Questions taken from the journal instead of executed.
    pub resumed: usize,
    /// Questions actually run this time.
    pub executed: usize,
}

/// Verify every question, at most `max_in_flight` at a time.
///
/// Results come back in input order regardless of completion order. With a
/// journal, already-completed questions are skipped and each newly finished
/// record is committed before the batch moves past it, so an interrupted
/// run resumes where it stopped and a finished run costs nothing to re-run.
pub async fn verify_batch(
    client: &dyn ChatClient,
    retriever: &dyn Retriever,
    questions: &[Question],
    config: &PipelineConfig,
    journal: Option<&Journal>,
    answers: Option<&AnswerCache>,
) -> Result<BatchOutcome, JournalError> {
    let mut slots: Vec<Option<VerificationRecord>> = questions
        .iter()
        .map(|q| journal.and_then(|j| j.completed(&q.qid)).cloned())
        .collect();
    let resumed = slots.iter().filter(|s| s.is_some()).count();

    let pending: Vec<(usize, &Question)> = questions
        .iter()
        .enumerate()
        .filter(|(i, _)| slots[*i].is_none())
        .collect();
    let executed = pending.len();

    let mut stream = futures::stream::iter(pending.into_iter().map(|(i, question)| async move {
        (i, verify_one(client, retriever, question, config, answers).await)
    }))
    .buffered(config.completion.max_in_flight.max(1));

    while let Some((i, record)) = stream.next().await {
        if let Some(journal) = journal {
            journal.append(&record)?;
        }
        slots[i] = Some(record);
    }

    let records = slots
        .into_iter()
        .map(|slot| slot.expect("every slot is filled"))
        .collect();
    Ok(BatchOutcome {
        records,
        resumed,
        executed,
    })
}
