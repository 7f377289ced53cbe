//! Use a pre-computed retrieval run as the evidence source instead of the
//! built-in BM25 index, the adapter for rankings produced by heavier
//! retrieval stacks elsewhere.
//!
//!     cargo run --example run_file_evidence

use verifact::corpus::{Corpus, Passage, Question};
use verifact::pipeline::{combine_query, RetrievalOutcome, Retriever};
use verifact::runs::{parse_run_str, serialize_run, RunRetriever};

const RUN: &str = "\
q1 Q0 p2 1 14.75 neural-stack
q1 Q0 p1 2 9.5 neural-stack
q2 Q0 p3 1 11.25 neural-stack
";

fn main() {
    let corpus = Corpus::from_passages(
        [
            ("p1", "Paris is the capital and most populous city of France."),
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

    let table = parse_run_str(RUN).unwrap();
    println!(
        "run tag {:?}: {} entries over {} queries",
        table.tag(),
        table.entry_count(),
        table.query_count()
    );

    let retriever = RunRetriever::new(&table, &corpus);
    for (qid, text, answer) in [
        ("q1", "where is the eiffel tower", "It stands in Paris."),
        ("q2", "which planet is the hottest", "Venus is the hottest."),
        ("q3", "how deep is the pacific", "Very deep."),
    ] {
        let question = Question {
            qid: qid.to_string(),
            text: text.to_string(),
        };
        match retriever.retrieve(&combine_query(&question, answer)) {
            RetrievalOutcome::Found(evidence) => println!(
                "{qid}: rank-1 pid {} (score {:?}): {}",
                evidence.pid, evidence.score, evidence.passage_text
            ),
            RetrievalOutcome::NoEvidence { diagnostic } => {
                println!("{qid}: no evidence ({})", diagnostic.unwrap_or_default())
            }
        }
    }

    // the serialized form is stable: parse -> serialize -> parse is identity
    let round_tripped = serialize_run(&parse_run_str(&serialize_run(&table)).unwrap());
    assert_eq!(serialize_run(&table), round_tripped);
    println!("\nserialized run:\n{}", serialize_run(&table));
}
