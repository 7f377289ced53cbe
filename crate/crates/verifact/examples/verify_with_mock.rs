//! Run the whole verification pipeline offline against a scripted client.
//!
//! The mock client replays canned responses keyed by prompt hash, so the
//! example is fully deterministic: same corpus, same questions, same
//! records every time.
//!
//!     cargo run --example verify_with_mock

use verifact::corpus::{Corpus, Passage, Question};
use verifact::index::{Bm25Params, InvertedIndex};
use verifact::llm::{answer_prompt, classify_prompt, MockClient};
use verifact::pipeline::{
    combine_query, verify_batch, Bm25Retriever, PipelineConfig, RecordOutcome,
};

#[tokio::main]
async fn main() {
    let corpus = Corpus::from_passages(
        [
            ("p1", "Water boils at 100 degrees Celsius at sea level."),
            ("p2", "The Eiffel Tower is located in Paris, France."),
            ("p3", "Venus is the hottest planet in the solar system."),
        ]
        .into_iter()
        .map(|(pid, text)| Passage {
            pid: pid.to_string(),
            text: text.to_string(),
        })
        .collect(),
    )
    .unwrap();
    let index = InvertedIndex::build(&corpus, Bm25Params::default()).unwrap();
    let retriever = Bm25Retriever::new(&index, &corpus);

    // question, the answer the mock will generate, and its verdict
    let cases = [
        ("q1", "at what temperature does water boil", "Water boils at 100 degrees Celsius.", "Yes"),
        ("q2", "where is the eiffel tower", "The Eiffel Tower is in Berlin.", "No"),
        ("q3", "which planet is the hottest", "Venus, because of its dense atmosphere.", "Yes"),
    ];

    // script both calls each question will make: generate, then classify
    // against whatever passage the combined query retrieves
    let mut builder = MockClient::builder();
    let mut questions = Vec::new();
    for (qid, question_text, answer, verdict) in cases {
        let question = Question {
            qid: qid.to_string(),
            text: question_text.to_string(),
        };
        builder = builder.script(&answer_prompt(question_text).text, answer);
        let combined = combine_query(&question, answer);
        let hit = index.search(&combined.text, 1).remove(0);
        let passage = corpus.get(&hit.pid).unwrap();
        builder = builder.script(
            &classify_prompt(question_text, answer, &passage.text).text,
            verdict,
        );
        questions.push(question);
    }
    let client = builder.build();

    let config = PipelineConfig::default();
    let outcome = verify_batch(&client, &retriever, &questions, &config, None, None)
        .await
        .unwrap();

    for record in &outcome.records {
        let evidence = record.evidence.as_ref().map(|e| e.pid.as_str()).unwrap_or("-");
        println!(
            "{}: {:12} evidence={}  answer={:?}",
            record.qid,
            record.outcome.label_str(),
            evidence,
            record.answer.as_ref().map(|a| a.text.as_str()).unwrap_or("")
        );
        if let RecordOutcome::Label(label) = &record.outcome {
            println!("    verdict: {label}");
        }
        println!("    wire: {}", record.to_json_line());
    }
    println!(
        "\n{} scripted completions served",
        client.total_calls()
    );
}
