//! Retrieval-backed verification of LLM answers.
//!
//! The pipeline asks a chat model a question, turns the question plus the
//! model's answer into a retrieval query, pulls the best-matching passage
//! from a reference collection, and then asks the model whether its own
//! answer agrees with that passage. Each question ends with one of three
//! labels (Yes, No, Not Related) or a recorded non-label outcome. Everything
//! is deterministic given the same inputs, so runs are resumable and
//! repeatable byte for byte.
//!
//! The crate splits into:
//! - [`corpus`]: TSV passage collections and query sets
//! - [`index`]: BM25 inverted index plus an independent brute-force scorer
//! - [`runs`]: TREC run files as an alternative evidence source
//! - [`llm`]: prompt templates, label parsing, and chat clients (HTTP or
//!   scripted mock)
//! - [`pipeline`]: the verification loop, batch driver, and resume journal
//! - [`analysis`]: label distributions, agreement matrices, audit sampling
//! - [`cli`]: the `verifact` command line

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod index;
pub mod llm;
pub mod pipeline;
pub mod runs;

pub use analysis::{
    agreement_matrix, label_distribution, render_audit_sheet, render_distribution, render_matrix,
    sample_for_audit, AgreementMatrix, AnalysisError, LabelDistribution, OutcomeClass,
};
pub use corpus::{load_collection, load_queries, Corpus, CorpusError, Passage, Question};
pub use index::{exhaustive_search, tokenize, Bm25Params, IndexError, InvertedIndex, ScoredPassage};
pub use llm::{
    parse_label, prompt_sha256, transcript_line, ChatClient, CompletionParams, HttpClient,
    LlmError, MockClient, PromptText, VerificationLabel,
};
pub use pipeline::{
    combine_query, verify_batch, verify_one, AnswerCache, Bm25Retriever, Evidence, Journal,
    PipelineConfig, RecordOutcome, RetrievalOutcome, Retriever, VerificationRecord,
};
pub use runs::{parse_run, serialize_run, RunEntry, RunError, RunRetriever, RunTable};
