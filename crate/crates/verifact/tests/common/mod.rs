//! Shared fixtures for the integration tests: a deterministic synthetic
//! collection, a small handcrafted fact corpus, scripted pipeline cases
//! with matching mock transcripts, and record builders for the analysis
//! suites.
#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use verifact::corpus::{Corpus, Passage, Question};
use verifact::index::InvertedIndex;
use verifact::llm::{answer_prompt, classify_prompt, reader_prompt, transcript_line, VerificationLabel};
use verifact::pipeline::{combine_query, RecordOutcome, VerificationRecord};

/// Common words first, so the quadratic pick below lands on them often.
/// The tail holds rarer content words in the style of web-search passages.
const WORDS: &[&str] = &[
    "the", "of", "a", "to", "in", "is", "for", "on", "and", "with", "that", "as", "are", "it",
    "by", "at", "from", "or", "an", "be", "this", "which", "was", "can", "has", "have", "not",
    "you", "your", "will", "may", "also", "about", "average", "cost", "per", "most", "some",
    "water", "temperature", "degrees", "celsius", "body", "blood", "pressure", "heart", "rate",
    "normal", "range", "between", "symptoms", "causes", "treatment", "doctor", "medication",
    "dose", "daily", "vitamin", "protein", "calories", "diet", "weight", "exercise", "muscle",
    "pain", "infection", "bacteria", "virus", "flu", "fever", "cough", "skin", "bone", "brain",
    "sleep", "stress", "city", "state", "county", "capital", "population", "located", "miles",
    "river", "mountain", "ocean", "island", "north", "south", "climate", "weather", "storm",
    "rainfall", "summer", "winter", "insurance", "salary", "income", "tax", "credit", "loan",
    "mortgage", "rent", "payment", "account", "bank", "phone", "number", "customer", "service",
    "company", "business", "employees", "school", "university", "student", "degree", "program",
    "definition", "meaning", "word", "example", "history", "century", "president", "government",
    "law", "court", "engine", "battery", "vehicle", "speed", "software", "password", "email",
    "internet", "energy", "electricity", "gas", "oil", "solar", "planet", "moon", "cells",
    "cancer", "diabetes", "surgery", "recovery", "pregnancy", "baby", "month", "week", "hours",
    "minutes", "seconds", "year", "days", "time", "takes", "long", "much", "many", "best",
];

fn pick_word(rng: &mut ChaCha8Rng) -> &'static str {
    let u: f64 = rng.random();
    let idx = ((WORDS.len() as f64) * u * u) as usize;
    WORDS[idx.min(WORDS.len() - 1)]
}

/// A space-joined word run with light punctuation and case noise, so the
/// tokenizer has something to normalize.
fn synthetic_text(rng: &mut ChaCha8Rng, min_words: usize, max_words: usize) -> String {
    let count = rng.random_range(min_words..=max_words);
    let mut words = Vec::with_capacity(count);
    for i in 0..count {
        let mut word = pick_word(rng).to_string();
        if i == 0 || rng.random_bool(0.08) {
            let mut chars = word.chars();
            let first = chars.next().unwrap().to_uppercase().to_string();
            word = first + chars.as_str();
        }
        if rng.random_bool(0.05) {
            word = format!("{}{}", word, rng.random_range(0..1000));
        }
        if i + 1 < count && rng.random_bool(0.07) {
            word.push(',');
        }
        words.push(word);
    }
    let mut text = words.join(" ");
    text.push('.');
    text
}

/// Deterministic stand-in for a passage-ranking collection sample.
pub fn synthetic_corpus(passages: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let passages = (0..passages)
        .map(|i| Passage {
            pid: format!("p{i}"),
            text: synthetic_text(&mut rng, 20, 60),
        })
        .collect();
    Corpus::from_passages(passages).expect("generated pids are unique")
}

/// Combined retrieval queries: a question-shaped run of words plus a
/// fixture answer, joined the same way the pipeline joins them.
pub fn synthetic_combined_queries(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    (0..count)
        .map(|i| {
            let question = Question {
                qid: format!("q{i}"),
                text: synthetic_text(&mut rng, 4, 9),
            };
            let answer = synthetic_text(&mut rng, 6, 15);
            combine_query(&question, &answer).text
        })
        .collect()
}

const FACTS: &[(&str, &str)] = &[
    ("f1", "Water boils at 100 degrees Celsius at sea level under standard atmospheric pressure."),
    ("f2", "The Eiffel Tower is located in Paris, France, on the Champ de Mars near the Seine."),
    ("f3", "Mount Everest rises 8849 meters above sea level, the tallest mountain on Earth."),
    ("f4", "The Great Barrier Reef stretches over 2300 kilometers off the coast of Queensland, Australia."),
    ("f5", "Honey never spoils because its low moisture content prevents bacterial growth."),
    ("f6", "The human heart beats roughly 100000 times every single day."),
    ("f7", "Venus is the hottest planet in the solar system because of its dense atmosphere."),
    ("f8", "The Pacific Ocean is the largest and deepest ocean on Earth."),
    ("f9", "Photosynthesis converts carbon dioxide and water into glucose using sunlight."),
    ("f10", "The Amazon River discharges more water than any other river in the world."),
    ("f11", "Mozart composed his first symphony when he was only eight years old."),
    ("f12", "The Sahara Desert covers most of northern Africa and keeps growing."),
];

/// Twelve handcrafted passages with clearly separated vocabulary.
pub fn fact_corpus() -> Corpus {
    let passages = FACTS
        .iter()
        .map(|(pid, text)| Passage {
            pid: (*pid).to_string(),
            text: (*text).to_string(),
        })
        .collect();
    Corpus::from_passages(passages).expect("fact pids are unique")
}

/// One scripted question: what gets asked, what the mock answers, and the
/// verdict the mock returns for the comparison.
#[derive(Debug, Clone)]
pub struct ScriptedCase {
    pub question: Question,
    pub answer: String,
    pub verdict: String,
}

/// Ten questions against [`fact_corpus`], each sharing vocabulary with one
/// passage so BM25 always finds evidence. Verdicts cover all three labels.
pub fn fact_cases() -> Vec<ScriptedCase> {
    let fixtures: [(&str, &str, &str, &str); 10] = [
        ("q1", "at what temperature does water boil", "Water boils at 100 degrees Celsius.", "Yes"),
        ("q2", "where is the eiffel tower located", "The Eiffel Tower is in Paris, France.", "Yes"),
        ("q3", "how tall is mount everest", "Mount Everest is 8849 meters tall.", "Yes"),
        ("q4", "how long is the great barrier reef", "The Great Barrier Reef is about 2300 kilometers long.", "Yes"),
        ("q5", "does honey ever spoil", "Honey spoils after a few months of storage.", "No"),
        ("q6", "how many times does the human heart beat daily", "The human heart beats about 100000 times a day.", "Yes"),
        ("q7", "which planet is the hottest in the solar system", "Mercury is the hottest planet in the solar system.", "No"),
        ("q8", "what is the largest ocean on earth", "The Pacific Ocean is the largest ocean on Earth.", "Yes"),
        ("q9", "what does photosynthesis convert sunlight into", "Photosynthesis produces glucose and oxygen.", "Yes"),
        ("q10", "which river discharges the most water", "The Congo basin has the densest rainforest.", "Not Related"),
    ];
    fixtures
        .into_iter()
        .map(|(qid, question, answer, verdict)| ScriptedCase {
            question: Question {
                qid: qid.to_string(),
                text: question.to_string(),
            },
            answer: answer.to_string(),
            verdict: verdict.to_string(),
        })
        .collect()
}

/// `count` scripted questions cycling through the fact passages, for
/// larger batches than [`fact_cases`] provides.
pub fn scripted_cases(corpus: &Corpus, count: usize) -> Vec<ScriptedCase> {
    let verdicts = ["Yes", "No", "Not Related"];
    (0..count)
        .map(|i| {
            let passage = corpus
                .by_ordinal(i % corpus.len())
                .expect("ordinal is in range");
            let words: Vec<&str> = passage.text.split_whitespace().take(5).collect();
            ScriptedCase {
                question: Question {
                    qid: format!("q{i:03}"),
                    text: format!("case {i} concerning {}", words.join(" ")),
                },
                answer: format!("In short, {} and so on.", words.join(" ")),
                verdict: verdicts[i % verdicts.len()].to_string(),
            }
        })
        .collect()
}

/// Every (prompt, response) pair a batch over `cases` will need, in stage
/// order per question: generate, optionally read, classify.
///
/// Evidence is resolved with the same index the run will use, so the
/// scripted classify prompt matches the real one byte for byte.
pub fn pipeline_script(
    index: &InvertedIndex,
    corpus: &Corpus,
    cases: &[ScriptedCase],
    use_reader: bool,
) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    for case in cases {
        pairs.push((answer_prompt(&case.question.text).text, case.answer.clone()));
        let combined = combine_query(&case.question, &case.answer);
        let Some(hit) = index.search(&combined.text, 1).into_iter().next() else {
            continue;
        };
        let passage = corpus.get(&hit.pid).expect("hit comes from this corpus");
        let compared = if use_reader {
            let extraction = format!("Concisely: {}", passage.text);
            pairs.push((
                reader_prompt(&case.question.text, &passage.text).text,
                extraction.clone(),
            ));
            extraction
        } else {
            passage.text.clone()
        };
        pairs.push((
            classify_prompt(&case.question.text, &case.answer, &compared).text,
            case.verdict.clone(),
        ));
    }
    pairs
}

/// Join script pairs into a JSONL transcript for the mock client.
pub fn transcript(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (prompt, response) in pairs {
        out.push_str(&transcript_line(prompt, response));
        out.push('\n');
    }
    out
}

pub fn questions_of(cases: &[ScriptedCase]) -> Vec<Question> {
    cases.iter().map(|c| c.question.clone()).collect()
}

/// Serialize a corpus in the collection file format.
pub fn corpus_tsv(corpus: &Corpus) -> String {
    let mut out = String::new();
    for passage in corpus.iter() {
        out.push_str(&format!("{}\t{}\n", passage.pid, passage.text));
    }
    out
}

/// Serialize questions in the query file format.
pub fn queries_tsv(questions: &[Question]) -> String {
    let mut out = String::new();
    for question in questions {
        out.push_str(&format!("{}\t{}\n", question.qid, question.text));
    }
    out
}

/// A finished record carrying only a label, for analysis fixtures.
pub fn labeled_record(qid: &str, label: VerificationLabel) -> VerificationRecord {
    VerificationRecord {
        qid: qid.to_string(),
        question: format!("question {qid}"),
        answer: None,
        retriever_id: Some("fixture".to_string()),
        evidence: None,
        compared: Some(format!("evidence for {qid}")),
        outcome: RecordOutcome::Label(label),
        raw: Some(label.as_str().to_string()),
    }
}

/// Records realizing the given per-label counts, in Yes, No, Not Related
/// order, with sequential qids.
pub fn records_with_counts(yes: usize, no: usize, not_related: usize) -> Vec<VerificationRecord> {
    let mut records = Vec::with_capacity(yes + no + not_related);
    let mut k = 0usize;
    for (label, count) in [
        (VerificationLabel::Yes, yes),
        (VerificationLabel::No, no),
        (VerificationLabel::NotRelated, not_related),
    ] {
        for _ in 0..count {
            records.push(labeled_record(&format!("t{k}"), label));
            k += 1;
        }
    }
    records
}

/// Two record sets over the same qids realizing a 3x3 label contingency
/// table, rows for the first set, columns for the second, both in Yes, No,
/// Not Related order.
pub fn paired_records_from_cells(
    cells: [[usize; 3]; 3],
) -> (Vec<VerificationRecord>, Vec<VerificationRecord>) {
    let labels = [
        VerificationLabel::Yes,
        VerificationLabel::No,
        VerificationLabel::NotRelated,
    ];
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut k = 0usize;
    for (r, row) in cells.iter().enumerate() {
        for (c, count) in row.iter().enumerate() {
            for _ in 0..*count {
                let qid = format!("m{k}");
                k += 1;
                a.push(labeled_record(&qid, labels[r]));
                b.push(labeled_record(&qid, labels[c]));
            }
        }
    }
    (a, b)
}
