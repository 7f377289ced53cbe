//! Build an index over a handful of passages and run a few queries,
//! cross-checking every ranking against the brute-force scorer.
//!
//!     cargo run --example build_and_search

use verifact::corpus::{Corpus, Passage};
use verifact::index::{exhaustive_search, Bm25Params, InvertedIndex};

fn main() {
    let passages = [
        ("p1", "Water boils at 100 degrees Celsius at sea level."),
        ("p2", "The Eiffel Tower is located in Paris, France."),
        ("p3", "Mount Everest is the tallest mountain above sea level."),
        ("p4", "Paris is the capital and most populous city of France."),
        ("p5", "Deep sea water stays cold even near the equator."),
    ]
    .into_iter()
    .map(|(pid, text)| Passage {
        pid: pid.to_string(),
        text: text.to_string(),
    })
    .collect();
    let corpus = Corpus::from_passages(passages).unwrap();

    let params = Bm25Params::default();
    let index = InvertedIndex::build(&corpus, params).unwrap();
    println!(
        "indexed {} passages, {} terms, avg length {:.2}",
        index.doc_count(),
        index.vocab_size(),
        index.avg_doc_len()
    );

    for query in ["paris france", "sea level", "boiling water temperature"] {
        println!("\nquery: {query}");
        let hits = index.search(query, 3);
        let check = exhaustive_search(&corpus, query, 3, params);
        assert_eq!(hits, check, "both scoring routes must agree");
        for (i, hit) in hits.iter().enumerate() {
            let passage = corpus.get(&hit.pid).unwrap();
            println!("  {}. {:8.4}  {}  {}", i + 1, hit.score, hit.pid, passage.text);
        }
        if hits.is_empty() {
            println!("  (no passage shares a term with the query)");
        }
    }
}
