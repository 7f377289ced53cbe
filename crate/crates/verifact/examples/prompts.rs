//! Render the three prompt templates and show how model replies are
//! reduced to verification labels.
//!
//!     cargo run --example prompts

use verifact::llm::{answer_prompt, classify_prompt, parse_label, reader_prompt};

fn main() {
    let question = "what is the boiling point of water";
    let passage = "Water boils at 100 degrees Celsius at sea level.";
    let llm_answer = "The boiling point of water is 100 degrees Celsius.";

    println!("--- answer prompt ---\n{}\n", answer_prompt(question).text);
    println!("--- reader prompt ---\n{}\n", reader_prompt(question, passage).text);
    println!(
        "--- classify prompt ---\n{}\n",
        classify_prompt(question, llm_answer, passage).text
    );

    println!("--- label parsing ---");
    let replies = [
        "Yes",
        "not related.",
        "No!\nThe two answers disagree.",
        "\"Yes\"",
        "I would need more context to provide a specific answer.",
    ];
    for reply in replies {
        match parse_label(reply) {
            Ok(label) => println!("{reply:?} -> {label}"),
            Err(_) => println!("{reply:?} -> unparseable"),
        }
    }
}
