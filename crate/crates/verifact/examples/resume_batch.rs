//! Interrupt a batch halfway and resume it from the journal, then verify
//! the same questions under a second retriever without regenerating any
//! answers, courtesy of the shared answer cache.
//!
//!     cargo run --example resume_batch

use verifact::corpus::{Corpus, Passage, Question};
use verifact::index::{Bm25Params, InvertedIndex};
use verifact::llm::{answer_prompt, classify_prompt, MockClient};
use verifact::pipeline::{
    combine_query, config_hash, verify_batch, AnswerCache, Bm25Retriever, ConfigFingerprint,
    Journal, PipelineConfig,
};
use verifact::runs::{RunEntry, RunRetriever, RunTable};

fn scripted(corpus: &Corpus, index: &InvertedIndex, questions: &[Question]) -> MockClient {
    let mut builder = MockClient::builder();
    for question in questions {
        let answer = format!("A short answer about {}.", question.text);
        builder = builder.script(&answer_prompt(&question.text).text, &answer);
        let combined = combine_query(question, &answer);
        if let Some(hit) = index.search(&combined.text, 1).into_iter().next() {
            let passage = corpus.get(&hit.pid).unwrap();
            builder = builder.script(
                &classify_prompt(&question.text, &answer, &passage.text).text,
                "Yes",
            );
        }
    }
    builder.build()
}

#[tokio::main]
async fn main() {
    let corpus = Corpus::from_passages(
        (0..6)
            .map(|i| Passage {
                pid: format!("p{i}"),
                text: format!("A short answer about topic{i}, with supporting details."),
            })
            .collect(),
    )
    .unwrap();
    let index = InvertedIndex::build(&corpus, Bm25Params::default()).unwrap();
    let retriever = Bm25Retriever::new(&index, &corpus);
    let questions: Vec<Question> = (0..6)
        .map(|i| Question {
            qid: format!("q{i}"),
            text: format!("what about topic{i}"),
        })
        .collect();

    let dir = tempfile::tempdir().unwrap();
    let journal_path = dir.path().join("records.jsonl.journal");
    let cache_path = dir.path().join("answers.jsonl");
    let config = PipelineConfig::default();
    let hash = config_hash(&ConfigFingerprint::new(&config, &retriever));

    // first attempt dies after three questions
    {
        let client = scripted(&corpus, &index, &questions);
        let journal = Journal::open(&journal_path, &hash).unwrap();
        let cache = AnswerCache::open(&cache_path).unwrap();
        let partial = verify_batch(
            &client,
            &retriever,
            &questions[..3],
            &config,
            Some(&journal),
            Some(&cache),
        )
        .await
        .unwrap();
        println!(
            "interrupted run: {} executed, {} completions served",
            partial.executed,
            client.total_calls()
        );
    }

    // the retry skips everything the journal already holds
    let client = scripted(&corpus, &index, &questions);
    let journal = Journal::open(&journal_path, &hash).unwrap();
    let cache = AnswerCache::open(&cache_path).unwrap();
    println!("journal already holds {} records", journal.completed_count());
    let outcome = verify_batch(
        &client,
        &retriever,
        &questions,
        &config,
        Some(&journal),
        Some(&cache),
    )
    .await
    .unwrap();
    println!(
        "resumed run: {} resumed, {} executed, {} completions served",
        outcome.resumed,
        outcome.executed,
        client.total_calls()
    );
    for record in &outcome.records {
        println!("  {} -> {}", record.qid, record.outcome.label_str());
    }
    println!("answer cache now holds {} answers", cache.len());

    // a second retriever configuration: replay the same rankings from a
    // run table; answers come from the cache, so only comparisons run
    let entries: Vec<RunEntry> = questions
        .iter()
        .filter_map(|question| {
            let answer = format!("A short answer about {}.", question.text);
            let combined = combine_query(question, &answer);
            index.search(&combined.text, 1).into_iter().next().map(|hit| RunEntry {
                qid: question.qid.clone(),
                pid: hit.pid,
                rank: 1,
                score: hit.score,
            })
        })
        .collect();
    let table = RunTable::from_entries("precomputed", entries).unwrap();
    let run_retriever = RunRetriever::new(&table, &corpus);

    let client = scripted(&corpus, &index, &questions);
    let second = verify_batch(&client, &run_retriever, &questions, &config, None, Some(&cache))
        .await
        .unwrap();
    let regenerated: usize = questions
        .iter()
        .map(|q| client.calls_for(&answer_prompt(&q.text).text))
        .sum();
    println!(
        "\nsecond configuration over {} questions: {} completions served, {} answers regenerated",
        second.records.len(),
        client.total_calls(),
        regenerated
    );
}
