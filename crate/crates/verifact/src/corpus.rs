//! Passage collections and query sets in the MS MARCO TSV layout.
//!
//! A collection file holds one passage per line as `pid<TAB>text`; a query
//! file holds one question per line as `qid<TAB>text`. Passage text may
//! itself contain tabs (the collection parser splits on the first tab only),
//! while query lines must have exactly two fields. Text is stored verbatim:
//! case folding and tokenization happen later, in the index.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

/// Errors produced while loading collections or query files.
#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `id<TAB>text`, found {fields} field(s)")]
    MalformedLine { line: usize, fields: usize },
    #[error("line {line}: empty identifier")]
    EmptyId { line: usize },
    #[error("line {line}: empty text for id {id}")]
    EmptyText { line: usize, id: String },
    #[error("duplicate id {id} (line {line})")]
    DuplicateId { id: String, line: usize },
}

/// A single corpus passage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage {
    pub pid: String,
    pub text: String,
}

/// A single query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub qid: String,
    pub text: String,
}

/// An immutable passage collection with lookup by pid.
///
/// Iteration order equals file order, so passage ordinals are stable across
/// loads of the same file.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    passages: Vec<Passage>,
    lookup: HashMap<String, usize>,
}

impl Corpus {
    /// Build a corpus from already-parsed passages. Fails on duplicate pids.
    pub fn from_passages(passages: Vec<Passage>) -> Result<Self, CorpusError> {
        let mut lookup = HashMap::with_capacity(passages.len());
        for (ordinal, passage) in passages.iter().enumerate() {
            if lookup.insert(passage.pid.clone(), ordinal).is_some() {
                return Err(CorpusError::DuplicateId {
                    id: passage.pid.clone(),
                    line: ordinal + 1,
                });
            }
        }
        Ok(Self { passages, lookup })
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    /// Passage for `pid`, or `None` if that pid was never loaded.
    pub fn get(&self, pid: &str) -> Option<&Passage> {
        self.lookup.get(pid).map(|&i| &self.passages[i])
    }

    /// Zero-based load position of `pid`.
    pub fn ordinal(&self, pid: &str) -> Option<usize> {
        self.lookup.get(pid).copied()
    }

    /// Passage at a given load position.
    pub fn by_ordinal(&self, ordinal: usize) -> Option<&Passage> {
        self.passages.get(ordinal)
    }

    /// Passages in file order.
    pub fn iter(&self) -> impl Iterator<Item = &Passage> {
        self.passages.iter()
    }
}

/// Load a passage collection from a `pid<TAB>text` TSV file.
///
/// Splits each line on the first tab, so passage text may contain tabs.
/// Empty and whitespace-only lines are skipped. The file must be valid UTF-8.
pub fn load_collection(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;

    let mut passages = Vec::new();
    let mut lookup = HashMap::new();
    for (idx, line) in contents.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (pid, text) = split_first_tab(line, line_no)?;
        validate_fields(pid, text, line_no)?;
        if lookup.contains_key(pid) {
            return Err(CorpusError::DuplicateId {
                id: pid.to_string(),
                line: line_no,
            });
        }
        lookup.insert(pid.to_string(), passages.len());
        passages.push(Passage {
            pid: pid.to_string(),
            text: text.to_string(),
        });
    }
    Ok(Corpus { passages, lookup })
}

/// Load a query set from a `qid<TAB>text` TSV file.
///
/// Unlike passages, query lines must have exactly two tab-separated fields.
pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Question>, CorpusError> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;

    let mut questions = Vec::new();
    let mut seen = HashMap::new();
    for (idx, line) in contents.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(CorpusError::MalformedLine {
                line: line_no,
                fields: fields.len(),
            });
        }
        let (qid, text) = (fields[0], fields[1]);
        validate_fields(qid, text, line_no)?;
        if seen.insert(qid.to_string(), line_no).is_some() {
            return Err(CorpusError::DuplicateId {
                id: qid.to_string(),
                line: line_no,
            });
        }
        questions.push(Question {
            qid: qid.to_string(),
            text: text.to_string(),
        });
    }
    Ok(questions)
}

fn split_first_tab(line: &str, line_no: usize) -> Result<(&str, &str), CorpusError> {
    line.split_once('\t')
        .ok_or(CorpusError::MalformedLine {
            line: line_no,
            fields: 1,
        })
}

fn validate_fields(id: &str, text: &str, line_no: usize) -> Result<(), CorpusError> {
    if id.trim().is_empty() {
        return Err(CorpusError::EmptyId { line: line_no });
    }
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyText {
            line: line_no,
            id: id.to_string(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_two_line_collection() {
        let f = write_tmp("p1\thello world\np2\tbye\n");
        let corpus = load_collection(f.path()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.ordinal("p1"), Some(0));
        assert_eq!(corpus.ordinal("p2"), Some(1));
        assert_eq!(corpus.get("p1").unwrap().text, "hello world");
    }

    #[test]
    fn empty_file_gives_empty_corpus() {
        let f = write_tmp("");
        let corpus = load_collection(f.path()).unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn duplicate_pid_is_an_error_naming_the_pid() {
        let f = write_tmp("p1\ta\np1\tb\n");
        let err = load_collection(f.path()).unwrap_err();
        match err {
            CorpusError::DuplicateId { id, line } => {
                assert_eq!(id, "p1");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_collection("/nonexistent/collection.tsv").unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }

    #[test]
    fn line_without_tab_is_malformed_with_line_number() {
        let f = write_tmp("p1\tok\nno tab here\n");
        let err = load_collection(f.path()).unwrap_err();
        match err {
            CorpusError::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn passage_text_may_contain_tabs() {
        let f = write_tmp("p1\tleft\tright\n");
        let corpus = load_collection(f.path()).unwrap();
        assert_eq!(corpus.get("p1").unwrap().text, "left\tright");
    }

    #[test]
    fn blank_and_whitespace_lines_are_skipped() {
        let f = write_tmp("p1\ta\n\n   \np2\tb\n");
        let corpus = load_collection(f.path()).unwrap();
        assert_eq!(corpus.len(), 2);
    }

    #[test]
    fn whitespace_only_text_is_rejected() {
        let f = write_tmp("p1\t   \n");
        assert!(matches!(
            load_collection(f.path()),
            Err(CorpusError::EmptyText { .. })
        ));
    }

    #[test]
    fn invalid_utf8_is_a_hard_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"p1\t\xff\xfe\n").unwrap();
        assert!(matches!(
            load_collection(f.path()),
            Err(CorpusError::Io { .. })
        ));
    }

    #[test]
    fn loads_single_query() {
        let f = write_tmp("q1\twhat is x\n");
        let queries = load_queries(f.path()).unwrap();
        assert_eq!(
            queries,
            vec![Question {
                qid: "q1".into(),
                text: "what is x".into()
            }]
        );
    }

    #[test]
    fn query_line_with_three_fields_is_malformed() {
        let f = write_tmp("q1\twhat is x\textra\n");
        let err = load_queries(f.path()).unwrap_err();
        match err {
            CorpusError::MalformedLine { line, fields } => {
                assert_eq!(line, 1);
                assert_eq!(fields, 3);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn exactly_the_loaded_pids_are_retrievable() {
        let f = write_tmp("p1\thello world\np2\tbye\n");
        let corpus = load_collection(f.path()).unwrap();
        assert!(corpus.get("p1").is_some());
        assert!(corpus.get("p2").is_some());
        assert!(corpus.get("zzz").is_none());
        assert_eq!(corpus.iter().count(), 2);
    }

    #[test]
    fn loading_is_deterministic() {
        let f = write_tmp("p9\tnine\np1\tone\np5\tfive\n");
        let a = load_collection(f.path()).unwrap();
        let b = load_collection(f.path()).unwrap();
        let pids_a: Vec<_> = a.iter().map(|p| p.pid.clone()).collect();
        let pids_b: Vec<_> = b.iter().map(|p| p.pid.clone()).collect();
        assert_eq!(pids_a, pids_b);
        assert_eq!(a.ordinal("p5"), b.ordinal("p5"));
    }
}
