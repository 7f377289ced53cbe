//! The verification pipeline.
//!
//! For each question: ask the model for an answer, append that answer to the
//! question to form a retrieval query, fetch the single best passage, then
//! ask the model whether its answer and the passage agree. With the reader
//! enabled, an extra step first distills the passage into a short answer and
//! the classifier compares against that instead of the raw passage.
//!
//! Failures never abort a question silently. Whatever happens is captured in
//! the returned [`VerificationRecord`]: a label, an unparseable verdict, a
//! missing-evidence marker, or the failing stage and its error.

mod batch;
mod record;

pub use batch::{
    config_hash, verify_batch, AnswerCache, BatchOutcome, CacheError, ConfigFingerprint, Journal,
    JournalError,
};
pub use record::{
    read_records, write_records, CombinedQuery, Evidence, GeneratedAnswer, RecordError,
    RecordOutcome, Stage, VerificationRecord,
};

use crate::corpus::{Corpus, Question};
use crate::index::InvertedIndex;
use crate::llm::{
    answer_prompt, classify_prompt, complete, parse_label, reader_prompt, ChatClient,
    CompletionParams,
};

/// Everything the pipeline needs besides the question itself.
#[derive(Debug, Clone, Default)]
pub struct PipelineConfig {
    pub completion: CompletionParams,
    /// Run the reader stage and classify against its extraction.
    pub use_reader: bool,
}

/// Join question and generated answer into one retrieval query.
///
/// The question comes first, then a single space, then the answer text
/// exactly as the model produced it.
pub fn combine_query(question: &Question, answer_text: &str) -> CombinedQuery {
    CombinedQuery {
        qid: question.qid.clone(),
        text: format!("{} {}", question.text, answer_text),
    }
}

/// What a retriever found for one combined query.
#[derive(Debug, Clone, PartialEq)]
pub enum RetrievalOutcome {
    Found(Evidence),
    NoEvidence { diagnostic: Option<String> },
}

/// A source of top-1 evidence passages.
pub trait Retriever: Send + Sync {
    /// Short identifier recorded on every record, e.g. `bm25`.
    fn id(&self) -> &str;

    /// Identity string folded into the config fingerprint. Two retrievers
    /// with different descriptors never share resume journal entries.
    fn descriptor(&self) -> String {
        self.id().to_string()
    }

    fn retrieve(&self, query: &CombinedQuery) -> RetrievalOutcome;
}

/// Top-1 BM25 retrieval over an indexed collection.
pub struct Bm25Retriever<'a> {
    index: &'a InvertedIndex,
    corpus: &'a Corpus,
}

impl<'a> Bm25Retriever<'a> {
    pub fn new(index: &'a InvertedIndex, corpus: &'a Corpus) -> Self {
        Self { index, corpus }
    }
}

impl Retriever for Bm25Retriever<'_> {
    fn id(&self) -> &str {
        "bm25"
    }

    fn descriptor(&self) -> String {
        let params = self.index.params();
        format!("bm25(k1={},b={})", params.k1, params.b)
    }

    fn retrieve(&self, query: &CombinedQuery) -> RetrievalOutcome {
        match self.index.search(&query.text, 1).into_iter().next() {
            None => RetrievalOutcome::NoEvidence { diagnostic: None },
            Some(hit) => match self.corpus.get(&hit.pid) {
                None => RetrievalOutcome::NoEvidence {
                    diagnostic: Some(format!(
                        "pid {} is indexed but missing from the collection",
                        hit.pid
                    )),
                },
                Some(passage) => RetrievalOutcome::Found(Evidence {
                    pid: hit.pid,
                    passage_text: passage.text.clone(),
                    score: Some(hit.score),
                    reader_answer: None,
                }),
            },
        }
    }
}

struct Parts {
    qid: String,
    question: String,
    answer: Option<GeneratedAnswer>,
    retriever_id: Option<String>,
    evidence: Option<Evidence>,
    compared: Option<String>,
    raw: Option<String>,
}

impl Parts {
    fn new(question: &Question) -> Self {
        Self {
            qid: question.qid.clone(),
            question: question.text.clone(),
            answer: None,
            retriever_id: None,
            evidence: None,
            compared: None,
            raw: None,
        }
    }

    fn finish(self, outcome: RecordOutcome) -> VerificationRecord {
        VerificationRecord {
            qid: self.qid,
            question: self.question,
            answer: self.answer,
            retriever_id: self.retriever_id,
            evidence: self.evidence,
            compared: self.compared,
            outcome,
            raw: self.raw,
        }
    }

    fn fail(self, stage: Stage, message: impl Into<String>) -> VerificationRecord {
        self.finish(RecordOutcome::Error {
            stage,
            message: message.into(),
        })
    }
}

/// Run the full pipeline on one question.
///
/// `answers` is an optional cache of generated answers, letting several
/// configurations (say, two retrievers) verify against the same answers
/// without regenerating them.
pub async fn verify_one(
    client: &dyn ChatClient,
    retriever: &dyn Retriever,
    question: &Question,
    config: &PipelineConfig,
    answers: Option<&AnswerCache>,
) -> VerificationRecord {
    let params = &config.completion;
    let mut parts = Parts::new(question);

    // generate
    let cached = answers.and_then(|cache| cache.lookup(question, params));
    let answer_text = match cached {
        Some(text) => text,
        None => {
            let prompt = answer_prompt(&question.text);
            let text = match complete(client, &prompt, params).await {
                Ok(text) => text,
                Err(e) => return parts.fail(Stage::Generate, e.to_string()),
            };
            if text.trim().is_empty() {
                return parts.fail(Stage::Generate, "model returned an empty answer");
            }
            if let Some(cache) = answers {
                if let Err(e) = cache.store(question, params, &text) {
                    return parts.fail(Stage::Generate, e.to_string());
                }
            }
            text
        }
    };
    let answer = GeneratedAnswer {
        qid: question.qid.clone(),
        text: answer_text,
        model_id: params.model_id.clone(),
        temperature: params.temperature,
    };
    parts.answer = Some(answer.clone());

    // combine and retrieve
    let combined = combine_query(question, &answer.text);
    parts.retriever_id = Some(retriever.id().to_string());
    let mut evidence = match retriever.retrieve(&combined) {
        RetrievalOutcome::Found(evidence) => evidence,
        RetrievalOutcome::NoEvidence { diagnostic } => {
            return parts.finish(RecordOutcome::NoEvidence { diagnostic })
        }
    };

    // reader
    if config.use_reader {
        let prompt = reader_prompt(&question.text, &evidence.passage_text);
        match complete(client, &prompt, params).await {
            Ok(text) => evidence.reader_answer = Some(text),
            Err(e) => {
                parts.evidence = Some(evidence);
                return parts.fail(Stage::Reader, e.to_string());
            }
        }
    }
    let compared = match &evidence.reader_answer {
        Some(reader_answer) => reader_answer.clone(),
        None => evidence.passage_text.clone(),
    };
    parts.evidence = Some(evidence);
    parts.compared = Some(compared.clone());

    // classify, with one automatic re-ask on an unparseable verdict
    let prompt = classify_prompt(&question.text, &answer.text, &compared);
    let first = match complete(client, &prompt, params).await {
        Ok(raw) => raw,
        Err(e) => return parts.fail(Stage::Classify, e.to_string()),
    };
    parts.raw = Some(first.clone());
    if let Ok(label) = parse_label(&first) {
        return parts.finish(RecordOutcome::Label(label));
    }
    let second = match complete(client, &prompt, params).await {
        Ok(raw) => raw,
        Err(e) => return parts.fail(Stage::Classify, e.to_string()),
    };
    parts.raw = Some(second.clone());
    match parse_label(&second) {
        Ok(label) => parts.finish(RecordOutcome::Label(label)),
        Err(_) => parts.finish(RecordOutcome::Unparseable),
    }
}
