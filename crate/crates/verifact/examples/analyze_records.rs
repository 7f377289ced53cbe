//! Summarize finished verification runs: per-label distributions for each
//! configuration and an agreement matrix between two of them.
//!
//!     cargo run --example analyze_records

use verifact::analysis::{
    agreement_matrix, label_distribution, render_distribution, render_matrix,
};
use verifact::llm::VerificationLabel;
use verifact::pipeline::{RecordOutcome, VerificationRecord};

fn record(qid: &str, label: Option<VerificationLabel>) -> VerificationRecord {
    VerificationRecord {
        qid: qid.to_string(),
        question: format!("question {qid}"),
        answer: None,
        retriever_id: Some("demo".to_string()),
        evidence: None,
        compared: Some(format!("evidence for {qid}")),
        outcome: match label {
            Some(label) => RecordOutcome::Label(label),
            None => RecordOutcome::Unparseable,
        },
        raw: None,
    }
}

fn main() {
    use VerificationLabel::*;

    // two configurations over the same 12 questions; they agree on 9
    let labels_a = [
        Some(Yes), Some(Yes), Some(Yes), Some(Yes), Some(Yes), Some(Yes),
        Some(No), Some(No), Some(NotRelated), Some(NotRelated), Some(Yes), None,
    ];
    let labels_b = [
        Some(Yes), Some(Yes), Some(Yes), Some(Yes), Some(Yes), Some(No),
        Some(No), Some(No), Some(NotRelated), Some(Yes), Some(Yes), Some(Yes),
    ];
    let a: Vec<VerificationRecord> = labels_a
        .into_iter()
        .enumerate()
        .map(|(i, label)| record(&format!("q{i}"), label))
        .collect();
    let b: Vec<VerificationRecord> = labels_b
        .into_iter()
        .enumerate()
        .map(|(i, label)| record(&format!("q{i}"), label))
        .collect();

    let dist_a = label_distribution(&a).unwrap();
    let dist_b = label_distribution(&b).unwrap();
    println!("{}", render_distribution("bm25", &dist_a));
    println!("{}", render_distribution("neural", &dist_b));

    let matrix = agreement_matrix("bm25", &a, "neural", &b).unwrap();
    println!("{}", render_matrix(&matrix));
    println!(
        "raw: {} of {} labeled pairs agree ({} shared, {} excluded)",
        matrix.agreeing(),
        matrix.labeled(),
        matrix.shared(),
        matrix.excluded
    );
}
