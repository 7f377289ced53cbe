//! Inverted index with Okapi BM25 ranking.
//!
//! Two scoring routes are provided on purpose. [`InvertedIndex::search`] goes
//! through postings lists; [`exhaustive_search`] rescoring every passage by
//! linear scan with no shared statistics. Both must agree, and the test suite
//! holds them to that. Keep the arithmetic in the two routes textually
//! identical so the agreement is exact rather than approximate.
//!
//! Query terms are treated as a set: repeating a term in the query does not
//! change any score. Results are filtered to positive scores and ordered by
//! score descending, then pid ascending.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

const SNAPSHOT_FORMAT: &str = "verifact-index";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("invalid BM25 parameters: {0}")]
    InvalidParams(String),
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("failed to {action} index snapshot at {path}: {source}")]
    SnapshotIo {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed index snapshot: {0}")]
    SnapshotParse(#[from] serde_json::Error),
    #[error("unsupported snapshot format {format:?} (expected {expected:?})")]
    SnapshotFormat { format: String, expected: &'static str },
    #[error("unsupported snapshot version {version} (expected {expected})")]
    SnapshotVersion { version: u32, expected: u32 },
}

/// Okapi BM25 parameters.
///
/// The defaults follow the tuning commonly used for MS MARCO passage
/// retrieval rather than the textbook k1=1.2, b=0.75.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.82, b: 0.68 }
    }
}

impl Bm25Params {
    fn validate(&self) -> Result<(), IndexError> {
        if !self.k1.is_finite() || self.k1 < 0.0 {
            return Err(IndexError::InvalidParams(format!(
                "k1 must be finite and non-negative, got {}",
                self.k1
            )));
        }
        if !self.b.is_finite() || !(0.0..=1.0).contains(&self.b) {
            return Err(IndexError::InvalidParams(format!(
                "b must lie in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }
}

/// One ranked hit. `rank` is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPassage {
    pub pid: String,
    pub score: f64,
    pub rank: usize,
}

/// Lowercase alphanumeric tokens.
///
/// Splits on every maximal run of non-alphanumeric characters, so
/// `"po-box"` becomes `["po", "box"]` and `"don't"` becomes `["don", "t"]`.
/// Alphanumeric is the Unicode property, not ASCII.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .collect()
}

fn distinct_terms(query: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut terms = Vec::new();
    for t in tokenize(query) {
        if seen.insert(t.clone()) {
            terms.push(t);
        }
    }
    terms
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    format: String,
    version: u32,
    params: Bm25Params,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    postings: HashMap<String, Vec<(u32, u32)>>,
}

/// A BM25 inverted index over one passage collection.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    total_length: u64,
    /// term -> (doc ordinal, term frequency), ordinals ascending.
    postings: HashMap<String, Vec<(u32, u32)>>,
    params: Bm25Params,
}

impl InvertedIndex {
    /// Index every passage in `corpus` under the given parameters.
    pub fn build(corpus: &Corpus, params: Bm25Params) -> Result<Self, IndexError> {
        params.validate()?;
        if corpus.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }

        let mut doc_ids = Vec::with_capacity(corpus.len());
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        let mut total_length = 0u64;
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();

        for (ordinal, passage) in corpus.iter().enumerate() {
            let tokens = tokenize(&passage.text);
            doc_ids.push(passage.pid.clone());
            doc_lengths.push(tokens.len() as u32);
            total_length += tokens.len() as u64;

            let mut counts: HashMap<String, u32> = HashMap::new();
            for token in tokens {
                *counts.entry(token).or_insert(0) += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push((ordinal as u32, tf));
            }
        }
        for list in postings.values_mut() {
            list.sort_unstable_by_key(|&(ordinal, _)| ordinal);
        }

        Ok(Self {
            doc_ids,
            doc_lengths,
            total_length,
            postings,
            params,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.postings.len()
    }

    /// Mean token count per indexed passage.
    pub fn avg_doc_len(&self) -> f64 {
        self.total_length as f64 / self.doc_ids.len() as f64
    }

    /// Inverse document frequency of a term under the non-negative BM25
    /// variant, `ln(1 + (N - df + 0.5) / (df + 0.5))`. Terms absent from the
    /// corpus have df = 0 and hence the largest idf.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = self.postings.get(term).map_or(0, Vec::len) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Top `k` passages for `query`, best first.
    ///
    /// Only passages with positive scores are returned, so the result may be
    /// shorter than `k` or empty. Ties are broken by pid ascending.
    pub fn search(&self, query: &str, k: usize) -> Vec<ScoredPassage> {
        let n = self.doc_ids.len() as f64;
        let avgdl = self.total_length as f64 / n;
        let terms = distinct_terms(query);

        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in &terms {
            let Some(postings) = self.postings.get(term) else {
                continue;
            };
            let df = postings.len() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            for &(ordinal, tf) in postings {
                let tf = tf as f64;
                let dl = self.doc_lengths[ordinal as usize] as f64;
                let norm = self.params.k1 * (1.0 - self.params.b + self.params.b * dl / avgdl);
                let contribution = idf * tf * (self.params.k1 + 1.0) / (tf + norm);
                *scores.entry(ordinal).or_insert(0.0) += contribution;
            }
        }

        let mut hits: Vec<(u32, f64)> = scores
            .into_iter()
            .filter(|&(_, score)| score > 0.0)
            .collect();
        hits.sort_unstable_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("BM25 scores are finite")
                .then_with(|| self.doc_ids[a.0 as usize].cmp(&self.doc_ids[b.0 as usize]))
        });
        hits.truncate(k);
        hits.into_iter()
            .enumerate()
            .map(|(i, (ordinal, score))| ScoredPassage {
                pid: self.doc_ids[ordinal as usize].clone(),
                score,
                rank: i + 1,
            })
            .collect()
    }

    /// Write the index to `path` as a self-describing JSON snapshot.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| IndexError::SnapshotIo {
            action: "write",
            path: path.display().to_string(),
            source,
        })?;
        let snapshot = Snapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            params: self.params,
            doc_ids: self.doc_ids.clone(),
            doc_lengths: self.doc_lengths.clone(),
            postings: self.postings.clone(),
        };
        serde_json::to_writer(BufWriter::new(file), &snapshot)?;
        Ok(())
    }

    /// Load an index previously written by [`save`](Self::save).
    ///
    /// A loaded index answers every query exactly as the one that was saved.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| IndexError::SnapshotIo {
            action: "read",
            path: path.display().to_string(),
            source,
        })?;
        let snapshot: Snapshot = serde_json::from_reader(BufReader::new(file))?;
        if snapshot.format != SNAPSHOT_FORMAT {
            return Err(IndexError::SnapshotFormat {
                format: snapshot.format,
                expected: SNAPSHOT_FORMAT,
            });
        }
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(IndexError::SnapshotVersion {
                version: snapshot.version,
                expected: SNAPSHOT_VERSION,
            });
        }
        snapshot.params.validate()?;
        let total_length = snapshot.doc_lengths.iter().map(|&l| l as u64).sum();
        Ok(Self {
            doc_ids: snapshot.doc_ids,
            doc_lengths: snapshot.doc_lengths,
            total_length,
            postings: snapshot.postings,
            params: snapshot.params,
        })
    }
}

/// Score every passage by brute force, sharing nothing with the index.
///
/// This recomputes document frequencies, term frequencies, lengths, and the
/// average length from the raw corpus on every call. It exists as an
/// independent check on [`InvertedIndex::search`] and uses the same ordering
/// and positive-score filter.
pub fn exhaustive_search(
    corpus: &Corpus,
    query: &str,
    k: usize,
    params: Bm25Params,
) -> Vec<ScoredPassage> {
    let docs: Vec<Vec<String>> = corpus.iter().map(|p| tokenize(&p.text)).collect();
    if docs.is_empty() {
        return Vec::new();
    }
    let n = docs.len() as f64;
    let total: u64 = docs.iter().map(|d| d.len() as u64).sum();
    let avgdl = total as f64 / n;
    let terms = distinct_terms(query);

    let doc_sets: Vec<HashSet<&str>> = docs
        .iter()
        .map(|d| d.iter().map(String::as_str).collect())
        .collect();
    let dfs: Vec<usize> = terms
        .iter()
        .map(|t| doc_sets.iter().filter(|s| s.contains(t.as_str())).count())
        .collect();

    let mut hits: Vec<(String, f64)> = Vec::new();
    for (i, passage) in corpus.iter().enumerate() {
        let dl = docs[i].len() as f64;
        let mut score = 0.0;
        for (term, &df) in terms.iter().zip(&dfs) {
            let tf = docs[i].iter().filter(|w| *w == term).count();
            if tf == 0 {
                continue;
            }
            let tf = tf as f64;
            let df = df as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let norm = params.k1 * (1.0 - params.b + params.b * dl / avgdl);
            let contribution = idf * tf * (params.k1 + 1.0) / (tf + norm);
            score += contribution;
        }
        if score > 0.0 {
            hits.push((passage.pid.clone(), score));
        }
    }

    hits.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("BM25 scores are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    hits.truncate(k);
    hits.into_iter()
        .enumerate()
        .map(|(i, (pid, score))| ScoredPassage {
            pid,
            score,
            rank: i + 1,
        })
        .collect()
}
