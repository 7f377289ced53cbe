//! Verify a few questions against a real chat-completion endpoint.
//!
//! Needs VERIFACT_API_KEY in the environment; prints instructions and
//! exits cleanly when it is absent. The endpoint defaults to the OpenAI
//! API and can be overridden with VERIFACT_ENDPOINT.
//!
//!     VERIFACT_API_KEY=sk-... cargo run --example live_endpoint

use verifact::corpus::{Corpus, Passage, Question};
use verifact::index::{Bm25Params, InvertedIndex};
use verifact::llm::{HttpClient, API_KEY_ENV, DEFAULT_ENDPOINT};
use verifact::pipeline::{verify_batch, Bm25Retriever, PipelineConfig};

#[tokio::main]
async fn main() {
    let endpoint =
        std::env::var("VERIFACT_ENDPOINT").unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string());
    let client = match HttpClient::from_env(&endpoint, 2) {
        Ok(client) => client,
        Err(e) => {
            eprintln!("{e}");
            eprintln!("set {API_KEY_ENV} to run this example against {endpoint}");
            return;
        }
    };

    let corpus = Corpus::from_passages(
        [
            ("p1", "Water boils at 100 degrees Celsius at sea level."),
            ("p2", "The Eiffel Tower is located in Paris, France."),
            ("p3", "Mount Everest rises 8849 meters above sea level."),
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

    let questions: Vec<Question> = [
        ("q1", "at what temperature does water boil"),
        ("q2", "in which city is the eiffel tower"),
        ("q3", "how tall is mount everest"),
    ]
    .into_iter()
    .map(|(qid, text)| Question {
        qid: qid.to_string(),
        text: text.to_string(),
    })
    .collect();

    let config = PipelineConfig::default();
    let outcome = verify_batch(&client, &retriever, &questions, &config, None, None)
        .await
        .unwrap();

    for record in &outcome.records {
        println!("{}: {}", record.qid, record.outcome.label_str());
        if let Some(answer) = &record.answer {
            println!("    model answered: {}", answer.text);
        }
        if let Some(compared) = &record.compared {
            println!("    compared against: {compared}");
        }
        if let Some(raw) = &record.raw {
            println!("    raw verdict: {raw:?}");
        }
    }
}
