//! TREC run files: parsing, validation, serialization, and use as an
//! evidence source.
//!
//! A run file has six whitespace-separated columns per line:
//!
//! ```text
//! qid Q0 pid rank score tag
//! ```
//!
//! The second column is ignored on input (by convention it is `Q0`) and
//! always written as `Q0`. Validation is strict: each qid's ranks must run
//! 1, 2, 3, … in file order with non-increasing scores, no (qid, pid) pair
//! may repeat, and one tag must cover the whole file. Scores are written
//! with six significant digits, which round-trips stably: serializing,
//! parsing, and serializing again reproduces the bytes.
//!
//! [`RunRetriever`] adapts a parsed run into the pipeline's [`Retriever`]
//! interface, serving each qid's rank-1 passage. This is how rankings
//! produced elsewhere (a neural retriever, say) plug into verification.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::corpus::Corpus;
use crate::pipeline::{CombinedQuery, Evidence, RetrievalOutcome, Retriever};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("failed to read run file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("run line {line}: expected 6 columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("run line {line}: {field} {value:?} is not a valid {expected}")]
    BadField {
        line: usize,
        field: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("run line {line}: rank {found} for qid {qid} breaks the 1..n sequence (expected {expected})")]
    RankGap {
        line: usize,
        qid: String,
        expected: u32,
        found: u32,
    },
    #[error("run line {line}: score {found} for qid {qid} exceeds the previous score {previous}")]
    ScoreIncrease {
        line: usize,
        qid: String,
        previous: f64,
        found: f64,
    },
    #[error("run line {line}: duplicate entry for qid {qid}, pid {pid}")]
    DuplicatePair {
        line: usize,
        qid: String,
        pid: String,
    },
    #[error("run line {line}: tag {found:?} does not match the file's tag {expected:?}")]
    TagMismatch {
        line: usize,
        expected: String,
        found: String,
    },
}

/// One ranked entry from a run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub qid: String,
    pub pid: String,
    pub rank: u32,
    pub score: f64,
}

/// A validated run: per-qid rankings under a single tag.
#[derive(Debug, Clone, Default)]
pub struct RunTable {
    tag: String,
    by_qid: HashMap<String, Vec<RunEntry>>,
    qid_order: Vec<String>,
}

impl RunTable {
    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn query_count(&self) -> usize {
        self.qid_order.len()
    }

    pub fn entry_count(&self) -> usize {
        self.by_qid.values().map(Vec::len).sum()
    }

    /// All entries for a qid, best rank first.
    pub fn ranking(&self, qid: &str) -> Option<&[RunEntry]> {
        self.by_qid.get(qid).map(Vec::as_slice)
    }

    /// The rank-1 entry for a qid.
    pub fn top1(&self, qid: &str) -> Option<&RunEntry> {
        self.by_qid.get(qid).and_then(|entries| entries.first())
    }

    /// Build a table from entries produced in-process (say, by BM25 search).
    ///
    /// Entries must already be grouped per qid in rank order; the same
    /// validation as [`parse_run`] applies.
    pub fn from_entries(
        tag: impl Into<String>,
        entries: Vec<RunEntry>,
    ) -> Result<Self, RunError> {
        let tag = tag.into();
        let mut table = RunTable {
            tag: tag.clone(),
            by_qid: HashMap::new(),
            qid_order: Vec::new(),
        };
        let mut seen_pairs = HashSet::new();
        for (idx, entry) in entries.into_iter().enumerate() {
            table.push_validated(entry, idx + 1, &mut seen_pairs)?;
        }
        Ok(table)
    }

    fn push_validated(
        &mut self,
        entry: RunEntry,
        line: usize,
        seen_pairs: &mut HashSet<(String, String)>,
    ) -> Result<(), RunError> {
        if !seen_pairs.insert((entry.qid.clone(), entry.pid.clone())) {
            return Err(RunError::DuplicatePair {
                line,
                qid: entry.qid,
                pid: entry.pid,
            });
        }
        if !self.by_qid.contains_key(&entry.qid) {
            self.qid_order.push(entry.qid.clone());
        }
        let ranking = self.by_qid.entry(entry.qid.clone()).or_default();
        let expected_rank = ranking.len() as u32 + 1;
        if entry.rank != expected_rank {
            return Err(RunError::RankGap {
                line,
                qid: entry.qid,
                expected: expected_rank,
                found: entry.rank,
            });
        }
        if let Some(previous) = ranking.last() {
            if entry.score > previous.score {
                return Err(RunError::ScoreIncrease {
                    line,
                    qid: entry.qid,
                    previous: previous.score,
                    found: entry.score,
                });
            }
        }
        ranking.push(entry);
        Ok(())
    }
}

/// Parse and validate run-file text.
pub fn parse_run_str(contents: &str) -> Result<RunTable, RunError> {
    let mut table: Option<RunTable> = None;
    let mut seen_pairs = HashSet::new();
    for (idx, raw_line) in contents.lines().enumerate() {
        let line = idx + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let columns: Vec<&str> = raw_line.split_whitespace().collect();
        if columns.len() != 6 {
            return Err(RunError::ColumnCount {
                line,
                found: columns.len(),
            });
        }
        let rank: u32 = columns[3].parse().map_err(|_| RunError::BadField {
            line,
            field: "rank",
            value: columns[3].to_string(),
            expected: "positive integer",
        })?;
        let score: f64 = columns[4]
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| RunError::BadField {
                line,
                field: "score",
                value: columns[4].to_string(),
                expected: "finite number",
            })?;
        let tag = columns[5];

        let table = table.get_or_insert_with(|| RunTable {
            tag: tag.to_string(),
            by_qid: HashMap::new(),
            qid_order: Vec::new(),
        });
        if table.tag != tag {
            return Err(RunError::TagMismatch {
                line,
                expected: table.tag.clone(),
                found: tag.to_string(),
            });
        }
        table.push_validated(
            RunEntry {
                qid: columns[0].to_string(),
                pid: columns[2].to_string(),
                rank,
                score,
            },
            line,
            &mut seen_pairs,
        )?;
    }
    Ok(table.unwrap_or_default())
}

/// Parse and validate a run file.
pub fn parse_run(path: impl AsRef<Path>) -> Result<RunTable, RunError> {
    let path = path.as_ref();
    let contents = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_run_str(&contents)
}

/// Format a score with six significant digits.
///
/// Decimal notation while the rounded magnitude stays within it (exponents
/// -4 through 5), scientific beyond that. Parsing the result back and
/// formatting again reproduces the same string.
pub fn format_score(score: f64) -> String {
    if score == 0.0 {
        return "0.00000".to_string();
    }
    let scientific = format!("{score:.5e}");
    let (_, exp) = scientific
        .split_once('e')
        .expect("{:.5e} always contains an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{score:.decimals$}")
    } else {
        scientific
    }
}

/// Serialize a table back to run-file text, qids in first-seen order.
pub fn serialize_run(table: &RunTable) -> String {
    let mut out = String::new();
    for qid in &table.qid_order {
        for entry in &table.by_qid[qid] {
            out.push_str(&format!(
                "{} Q0 {} {} {} {}\n",
                entry.qid,
                entry.pid,
                entry.rank,
                format_score(entry.score),
                table.tag
            ));
        }
    }
    out
}

/// Evidence from a pre-computed run: each question gets its rank-1 passage.
pub struct RunRetriever<'a> {
    table: &'a RunTable,
    corpus: &'a Corpus,
}

impl<'a> RunRetriever<'a> {
    pub fn new(table: &'a RunTable, corpus: &'a Corpus) -> Self {
        Self { table, corpus }
    }
}

impl Retriever for RunRetriever<'_> {
    fn id(&self) -> &str {
        self.table.tag()
    }

    fn descriptor(&self) -> String {
        format!("run:{}", self.table.tag())
    }

    fn retrieve(&self, query: &CombinedQuery) -> RetrievalOutcome {
        match self.table.top1(&query.qid) {
            None => RetrievalOutcome::NoEvidence {
                diagnostic: Some(format!("qid {} has no entries in the run", query.qid)),
            },
            Some(entry) => match self.corpus.get(&entry.pid) {
                None => RetrievalOutcome::NoEvidence {
                    diagnostic: Some(format!(
                        "run names pid {} for qid {}, but the collection has no such passage",
                        entry.pid, query.qid
                    )),
                },
                Some(passage) => RetrievalOutcome::Found(Evidence {
                    pid: entry.pid.clone(),
                    passage_text: passage.text.clone(),
                    score: Some(entry.score),
                    reader_answer: None,
                }),
            },
        }
    }
}
