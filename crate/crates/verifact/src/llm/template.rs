//! Prompt templates for the three LLM roles.
//!
//! The template texts live as data files under `templates/` and are compiled
//! in verbatim. Placeholders look like `{query}` and are substituted in a
//! single left-to-right pass: substituted values are emitted as-is and never
//! rescanned, so an answer that happens to contain `{passage}` stays literal.

use serde::{Deserialize, Serialize};

/// Answer generation: ask the question cold, no evidence.
pub const ANSWER_TEMPLATE: &str = include_str!("../../templates/answer.txt");
/// Reader: extract a concise answer to the question from a passage.
pub const READER_TEMPLATE: &str = include_str!("../../templates/reader.txt");
/// Classifier: compare two answers and emit Yes, No, or Not Related.
pub const CLASSIFY_TEMPLATE: &str = include_str!("../../templates/classify.txt");

/// Which template a prompt was rendered from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateId {
    Answer,
    Reader,
    Classify,
}

/// A fully rendered prompt, ready to send.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptText {
    pub template_id: TemplateId,
    pub text: String,
}

/// Prompt asking the model to answer `query` directly.
pub fn answer_prompt(query: &str) -> PromptText {
    PromptText {
        template_id: TemplateId::Answer,
        text: render(ANSWER_TEMPLATE, &[("query", query)]),
    }
}

/// Prompt asking the model to extract the answer to `query` from `passage`.
pub fn reader_prompt(query: &str, passage: &str) -> PromptText {
    PromptText {
        template_id: TemplateId::Reader,
        text: render(READER_TEMPLATE, &[("query", query), ("passage", passage)]),
    }
}

/// Prompt asking the model to compare the generated answer against the
/// retrieved one.
pub fn classify_prompt(query: &str, llm_answer: &str, retriever_answer: &str) -> PromptText {
    PromptText {
        template_id: TemplateId::Classify,
        text: render(
            CLASSIFY_TEMPLATE,
            &[
                ("query", query),
                ("LLM_answer", llm_answer),
                ("Retriever_answer", retriever_answer),
            ],
        ),
    }
}

fn render(template: &str, substitutions: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        let (before, from_brace) = rest.split_at(open);
        out.push_str(before);
        for (name, value) in substitutions {
            let placeholder_len = name.len() + 2;
            if from_brace.len() >= placeholder_len
                && from_brace[1..].starts_with(name)
                && from_brace[1 + name.len()..].starts_with('}')
            {
                out.push_str(value);
                rest = &from_brace[placeholder_len..];
                continue 'scan;
            }
        }
        // a brace that opens no known placeholder is kept verbatim
        out.push('{');
        rest = &from_brace[1..];
    }
    out.push_str(rest);
    out
}
