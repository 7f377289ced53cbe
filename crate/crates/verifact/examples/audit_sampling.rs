//! Draw a seeded random sample of records for manual auditing and print
//! the review sheet.
//!
//!     cargo run --example audit_sampling

use verifact::analysis::{render_audit_sheet, sample_for_audit, OutcomeClass};
use verifact::corpus::Question;
use verifact::llm::VerificationLabel;
use verifact::pipeline::{GeneratedAnswer, RecordOutcome, VerificationRecord};

fn main() {
    let labels = [
        VerificationLabel::Yes,
        VerificationLabel::Yes,
        VerificationLabel::No,
    ];
    let records: Vec<VerificationRecord> = (0..30)
        .map(|i| {
            let question = Question {
                qid: format!("q{i}"),
                text: format!("sample question number {i}"),
            };
            VerificationRecord {
                qid: question.qid.clone(),
                question: question.text,
                answer: Some(GeneratedAnswer {
                    qid: format!("q{i}"),
                    text: format!("generated answer {i}"),
                    model_id: "demo-model".to_string(),
                    temperature: 0.0,
                }),
                retriever_id: Some("bm25".to_string()),
                evidence: None,
                compared: Some(format!("retrieved passage {i}")),
                outcome: RecordOutcome::Label(labels[i % labels.len()]),
                raw: None,
            }
        })
        .collect();

    // same seed, same sample, every time
    for seed in [7, 7, 8] {
        let sample = sample_for_audit(&records, OutcomeClass::Yes, 3, seed).unwrap();
        let qids: Vec<&str> = sample.iter().map(|r| r.qid.as_str()).collect();
        println!("seed {seed}: {qids:?}");
    }

    let sample = sample_for_audit(&records, OutcomeClass::Yes, 3, 7).unwrap();
    println!("\n{}", render_audit_sheet(&sample));
}
