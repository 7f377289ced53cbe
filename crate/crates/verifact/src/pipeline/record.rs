//! Verification records and their JSONL wire form.
//!
//! One record per question, whatever happened. Questions that made it to a
//! verdict carry a label; the rest record why they did not (no evidence, an
//! unparseable classifier response, or a stage error). Keeping failures in
//! the record stream instead of aborting lets a batch finish and lets the
//! analysis stage count every question.
//!
//! The wire form is one JSON object per line with a stable set of field
//! names. Ten fields are always present (null when absent): qid, question,
//! answer, retriever_id, pid, passage, reader_answer, compared, label, raw.
//! The rest (model_id, temperature, score, diagnostic, error) appear only
//! when they carry a value.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::llm::VerificationLabel;

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("failed to {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("line {line}: malformed record: {message}")]
    MalformedAt { line: usize, message: String },
}

/// Pipeline stage names, used when recording where a failure happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Generate,
    Combine,
    Retrieve,
    Reader,
    Classify,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Generate => "generate",
            Stage::Combine => "combine",
            Stage::Retrieve => "retrieve",
            Stage::Reader => "reader",
            Stage::Classify => "classify",
        })
    }
}

/// The model's closed-book answer to a question.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedAnswer {
    pub qid: String,
    pub text: String,
    pub model_id: String,
    pub temperature: f64,
}

/// Question text and generated answer joined into one retrieval query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinedQuery {
    pub qid: String,
    pub text: String,
}

/// The passage a retriever nominated as evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub pid: String,
    pub passage_text: String,
    /// Retrieval score when the retriever produces one.
    pub score: Option<f64>,
    /// Filled in by the reader stage when it runs.
    pub reader_answer: Option<String>,
}

/// How a question's verification ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordOutcome {
    Label(VerificationLabel),
    /// The classifier answered twice without producing a bare label.
    Unparseable,
    /// The retriever had nothing to offer for the combined query.
    NoEvidence { diagnostic: Option<String> },
    /// A stage failed outright; the question was not verified.
    Error { stage: Stage, message: String },
}

impl RecordOutcome {
    /// The string written to the wire `label` field.
    pub fn label_str(&self) -> &str {
        match self {
            RecordOutcome::Label(label) => label.as_str(),
            RecordOutcome::Unparseable => "Unparseable",
            RecordOutcome::NoEvidence { .. } => "NoEvidence",
            RecordOutcome::Error { .. } => "Error",
        }
    }
}

/// Everything known about one question after the pipeline ran on it.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRecord {
    pub qid: String,
    pub question: String,
    pub answer: Option<GeneratedAnswer>,
    /// Which retriever was consulted, once retrieval was attempted.
    pub retriever_id: Option<String>,
    pub evidence: Option<Evidence>,
    /// The text that stood in for the retrieved answer during classification.
    pub compared: Option<String>,
    pub outcome: RecordOutcome,
    /// The classifier's raw response, kept for auditing.
    pub raw: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct WireError {
    stage: Stage,
    message: String,
}

// field order here is the field order on the wire
#[derive(Serialize, Deserialize)]
struct WireRecord {
    qid: String,
    question: String,
    answer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    model_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    temperature: Option<f64>,
    retriever_id: Option<String>,
    pid: Option<String>,
    passage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    score: Option<f64>,
    reader_answer: Option<String>,
    compared: Option<String>,
    label: String,
    raw: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    diagnostic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    error: Option<WireError>,
}

impl VerificationRecord {
    fn to_wire(&self) -> WireRecord {
        let (diagnostic, error) = match &self.outcome {
            RecordOutcome::NoEvidence { diagnostic } => (diagnostic.clone(), None),
            RecordOutcome::Error { stage, message } => (
                None,
                Some(WireError {
                    stage: *stage,
                    message: message.clone(),
                }),
            ),
            _ => (None, None),
        };
        WireRecord {
            qid: self.qid.clone(),
            question: self.question.clone(),
            answer: self.answer.as_ref().map(|a| a.text.clone()),
            model_id: self.answer.as_ref().map(|a| a.model_id.clone()),
            temperature: self.answer.as_ref().map(|a| a.temperature),
            retriever_id: self.retriever_id.clone(),
            pid: self.evidence.as_ref().map(|e| e.pid.clone()),
            passage: self.evidence.as_ref().map(|e| e.passage_text.clone()),
            score: self.evidence.as_ref().and_then(|e| e.score),
            reader_answer: self.evidence.as_ref().and_then(|e| e.reader_answer.clone()),
            compared: self.compared.clone(),
            label: self.outcome.label_str().to_string(),
            raw: self.raw.clone(),
            diagnostic,
            error,
        }
    }

    fn from_wire(wire: WireRecord) -> Result<Self, RecordError> {
        let outcome = match wire.label.as_str() {
            "Yes" => RecordOutcome::Label(VerificationLabel::Yes),
            "No" => RecordOutcome::Label(VerificationLabel::No),
            "Not Related" => RecordOutcome::Label(VerificationLabel::NotRelated),
            "Unparseable" => RecordOutcome::Unparseable,
            "NoEvidence" => RecordOutcome::NoEvidence {
                diagnostic: wire.diagnostic,
            },
            "Error" => {
                let detail = wire.error.ok_or_else(|| {
                    RecordError::Malformed(
                        "label is Error but the error field is missing".to_string(),
                    )
                })?;
                RecordOutcome::Error {
                    stage: detail.stage,
                    message: detail.message,
                }
            }
            other => {
                return Err(RecordError::Malformed(format!(
                    "unknown label value {other:?}"
                )))
            }
        };
        let answer = wire.answer.map(|text| GeneratedAnswer {
            qid: wire.qid.clone(),
            text,
            model_id: wire.model_id.unwrap_or_default(),
            temperature: wire.temperature.unwrap_or(0.0),
        });
        let evidence = wire.pid.map(|pid| Evidence {
            pid,
            passage_text: wire.passage.unwrap_or_default(),
            score: wire.score,
            reader_answer: wire.reader_answer,
        });
        Ok(Self {
            qid: wire.qid,
            question: wire.question,
            answer,
            retriever_id: wire.retriever_id,
            evidence,
            compared: wire.compared,
            outcome,
            raw: wire.raw,
        })
    }

    /// One JSON object, no trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("records always serialize")
    }

    pub fn from_json_line(line: &str) -> Result<Self, RecordError> {
        let wire: WireRecord =
            serde_json::from_str(line).map_err(|e| RecordError::Malformed(e.to_string()))?;
        Self::from_wire(wire)
    }
}

/// Read a JSONL record file, strictly. Blank lines are skipped.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<VerificationRecord>, RecordError> {
    let path = path.as_ref();
    let contents = std::fs::read_to_string(path).map_err(|source| RecordError::Io {
        action: "read",
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    for (idx, line) in contents.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = VerificationRecord::from_json_line(line).map_err(|e| match e {
            RecordError::Malformed(message) => RecordError::MalformedAt {
                line: idx + 1,
                message,
            },
            other => other,
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Write records as JSONL, one line each, replacing any existing file.
pub fn write_records(
    path: impl AsRef<Path>,
    records: &[VerificationRecord],
) -> Result<(), RecordError> {
    let path = path.as_ref();
    let mut out = String::new();
    for record in records {
        out.push_str(&record.to_json_line());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| RecordError::Io {
        action: "write",
        path: path.display().to_string(),
        source,
    })
}
