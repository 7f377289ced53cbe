//! The three-way verification label and the parser that extracts it from
//! model output.
//!
//! The classifier prompt demands a bare label, but models still wrap it in
//! punctuation ("Yes."), shout it ("NO!"), or bury it under explanation. The
//! parser accepts exactly one decoration pattern: whatever is on the first
//! line, minus trailing periods, exclamation marks, and double quotes, must
//! equal a label case-insensitively. Everything else, including refusals and
//! verbose verdicts, is an unparseable response that the caller records
//! rather than guesses about.

use serde::{Deserialize, Serialize};

/// Verdict on whether the model's answer agrees with the retrieved one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerificationLabel {
    /// Both answers say the same thing with respect to the question.
    Yes,
    /// The answers disagree.
    No,
    /// At least one answer does not address the question.
    NotRelated,
}

impl VerificationLabel {
    pub const ALL: [VerificationLabel; 3] = [
        VerificationLabel::Yes,
        VerificationLabel::No,
        VerificationLabel::NotRelated,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            VerificationLabel::Yes => "Yes",
            VerificationLabel::No => "No",
            VerificationLabel::NotRelated => "Not Related",
        }
    }
}

impl std::fmt::Display for VerificationLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A model response that the label parser could not reduce to a label.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("response is not a bare verification label: {0:?}")]
pub struct UnparseableResponse(pub String);

/// Extract a [`VerificationLabel`] from a raw classifier response.
///
/// Only the first line is considered. Surrounding whitespace and any
/// trailing run of `.`, `!`, and `"` (whitespace interleaved) are stripped,
/// and what remains must equal one of the labels, case-insensitively and in
/// full. `"Not related."` parses; `"Yes, they agree"` does not.
pub fn parse_label(response: &str) -> Result<VerificationLabel, UnparseableResponse> {
    let first_line = response.lines().next().unwrap_or("");
    let mut candidate = first_line.trim();
    loop {
        let trimmed = candidate.trim_end();
        match trimmed.strip_suffix(['.', '!', '"']) {
            Some(shorter) => candidate = shorter,
            None => {
                candidate = trimmed;
                break;
            }
        }
    }

    let lowered = candidate.to_lowercase();
    if lowered == "not related" {
        Ok(VerificationLabel::NotRelated)
    } else if lowered == "yes" {
        Ok(VerificationLabel::Yes)
    } else if lowered == "no" {
        Ok(VerificationLabel::No)
    } else {
        Err(UnparseableResponse(response.to_string()))
    }
}
