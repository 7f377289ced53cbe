//! Aggregate views over verification records: outcome distributions,
//! cross-configuration agreement, and seeded audit samples.
//!
//! Distributions count every record, including the ones that never reached a
//! verdict, so percentages always speak for the whole run. Agreement
//! matrices join two runs on qid and compare labels; shared questions where
//! either side lacks a proper label are counted as excluded rather than
//! silently dropped. The agreement rate is the diagonal over all labeled
//! pairs.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::llm::VerificationLabel;
use crate::pipeline::{RecordOutcome, VerificationRecord};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("no records to analyze")]
    Empty,
    #[error("duplicate qid {qid} in {side}")]
    DuplicateQid { side: String, qid: String },
    #[error("the two record sets share no qids")]
    NoSharedQuestions,
    #[error("requested {requested} samples with outcome {class} but only {available} exist")]
    NotEnoughSamples {
        class: &'static str,
        requested: usize,
        available: usize,
    },
}

/// Every way a record can end, the three labels plus the bookkeeping
/// outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeClass {
    Yes,
    No,
    NotRelated,
    Unparseable,
    NoEvidence,
    Error,
}

impl OutcomeClass {
    /// Label classes first, in presentation order, then the rest.
    pub const ALL: [OutcomeClass; 6] = [
        OutcomeClass::Yes,
        OutcomeClass::No,
        OutcomeClass::NotRelated,
        OutcomeClass::Unparseable,
        OutcomeClass::NoEvidence,
        OutcomeClass::Error,
    ];

    /// The three label classes in presentation order, the axes of an
    /// agreement matrix.
    pub const LABELS: [OutcomeClass; 3] = [
        OutcomeClass::Yes,
        OutcomeClass::No,
        OutcomeClass::NotRelated,
    ];

    pub fn of(record: &VerificationRecord) -> Self {
        match &record.outcome {
            RecordOutcome::Label(VerificationLabel::Yes) => OutcomeClass::Yes,
            RecordOutcome::Label(VerificationLabel::NotRelated) => OutcomeClass::NotRelated,
            RecordOutcome::Label(VerificationLabel::No) => OutcomeClass::No,
            RecordOutcome::Unparseable => OutcomeClass::Unparseable,
            RecordOutcome::NoEvidence { .. } => OutcomeClass::NoEvidence,
            RecordOutcome::Error { .. } => OutcomeClass::Error,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            OutcomeClass::Yes => "Yes",
            OutcomeClass::No => "No",
            OutcomeClass::NotRelated => "Not Related",
            OutcomeClass::Unparseable => "Unparseable",
            OutcomeClass::NoEvidence => "NoEvidence",
            OutcomeClass::Error => "Error",
        }
    }

    /// Whether this class is one of the three verification labels.
    pub fn is_label(&self) -> bool {
        matches!(
            self,
            OutcomeClass::Yes | OutcomeClass::NotRelated | OutcomeClass::No
        )
    }

    fn label_index(&self) -> Option<usize> {
        OutcomeClass::LABELS.iter().position(|c| c == self)
    }

    /// Parse the wire spelling, e.g. for a CLI flag.
    pub fn parse(s: &str) -> Option<Self> {
        OutcomeClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
    }
}

impl std::fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How many records ended in each class, out of `total`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution {
    pub total: usize,
    counts: [usize; 6],
}

impl LabelDistribution {
    pub fn count(&self, class: OutcomeClass) -> usize {
        let i = OutcomeClass::ALL.iter().position(|c| *c == class).unwrap();
        self.counts[i]
    }

    /// Share of all records, in percent. The denominator is every record,
    /// not just the labeled ones.
    pub fn percent(&self, class: OutcomeClass) -> f64 {
        100.0 * self.count(class) as f64 / self.total as f64
    }
}

/// Count outcomes across one run's records.
pub fn label_distribution(
    records: &[VerificationRecord],
) -> Result<LabelDistribution, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut counts = [0usize; 6];
    for record in records {
        let class = OutcomeClass::of(record);
        let i = OutcomeClass::ALL.iter().position(|c| *c == class).unwrap();
        counts[i] += 1;
    }
    Ok(LabelDistribution {
        total: records.len(),
        counts,
    })
}

/// Label-vs-label contingency table for two runs over the same questions.
///
/// Rows follow `id_a`, columns `id_b`, both in Yes, No, Not Related order.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementMatrix {
    pub id_a: String,
    pub id_b: String,
    pub cells: [[usize; 3]; 3],
    /// Shared questions where at least one side had no label.
    pub excluded: usize,
}

impl AgreementMatrix {
    /// Questions present in both runs, labeled or not.
    pub fn shared(&self) -> usize {
        self.labeled() + self.excluded
    }

    /// Questions with a label on both sides.
    pub fn labeled(&self) -> usize {
        self.cells.iter().flatten().sum()
    }

    /// Questions where both runs chose the same label.
    pub fn agreeing(&self) -> usize {
        (0..3).map(|i| self.cells[i][i]).sum()
    }

    /// Percentage of labeled pairs on the diagonal. Excluded questions are
    /// not in the denominator.
    pub fn agreement_rate(&self) -> f64 {
        100.0 * self.agreeing() as f64 / self.labeled() as f64
    }
}

fn class_by_qid(
    side: &str,
    records: &[VerificationRecord],
) -> Result<HashMap<String, OutcomeClass>, AnalysisError> {
    let mut map = HashMap::with_capacity(records.len());
    for record in records {
        if map
            .insert(record.qid.clone(), OutcomeClass::of(record))
            .is_some()
        {
            return Err(AnalysisError::DuplicateQid {
                side: side.to_string(),
                qid: record.qid.clone(),
            });
        }
    }
    Ok(map)
}

/// Join two runs on qid and tabulate their labels against each other.
pub fn agreement_matrix(
    id_a: &str,
    records_a: &[VerificationRecord],
    id_b: &str,
    records_b: &[VerificationRecord],
) -> Result<AgreementMatrix, AnalysisError> {
    let classes_a = class_by_qid(id_a, records_a)?;
    let classes_b = class_by_qid(id_b, records_b)?;

    let mut cells = [[0usize; 3]; 3];
    let mut excluded = 0usize;
    let mut shared = 0usize;
    for record in records_a {
        let Some(class_b) = classes_b.get(&record.qid) else {
            continue;
        };
        shared += 1;
        let class_a = classes_a[&record.qid];
        match (class_a.label_index(), class_b.label_index()) {
            (Some(row), Some(col)) => cells[row][col] += 1,
            _ => excluded += 1,
        }
    }
    if shared == 0 {
        return Err(AnalysisError::NoSharedQuestions);
    }
    Ok(AgreementMatrix {
        id_a: id_a.to_string(),
        id_b: id_b.to_string(),
        cells,
        excluded,
    })
}

/// 1234567 -> "1,234,567"
pub fn group_thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn cell(count: usize, percent: f64) -> String {
    format!("{} ({:.1}%)", group_thousands(count), percent)
}

fn render_table(rows: &[Vec<String>]) -> String {
    let columns = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, value) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            line.push_str(value);
            if c + 1 < row.len() {
                line.push_str(&" ".repeat(widths[c].saturating_sub(value.len())));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Fixed-width text report for one run's outcome distribution. Each cell
/// reads "count (share%)" with the share over all records.
pub fn render_distribution(id: &str, dist: &LabelDistribution) -> String {
    let mut rows = vec![vec!["Outcome".to_string(), id.to_string()]];
    for class in OutcomeClass::ALL {
        let count = dist.count(class);
        if !class.is_label() && count == 0 {
            continue;
        }
        rows.push(vec![
            class.as_str().to_string(),
            cell(count, dist.percent(class)),
        ]);
    }
    rows.push(vec!["Total".to_string(), group_thousands(dist.total)]);
    render_table(&rows)
}

/// The distribution as CSV with the same numbers as the text report.
pub fn distribution_csv(dist: &LabelDistribution) -> String {
    let mut out = String::from("outcome,count,share_pct\n");
    for class in OutcomeClass::ALL {
        let count = dist.count(class);
        if !class.is_label() && count == 0 {
            continue;
        }
        out.push_str(&format!(
            "{},{},{:.1}\n",
            class.as_str(),
            count,
            dist.percent(class)
        ));
    }
    out.push_str(&format!("total,{},100.0\n", dist.total));
    out
}

/// Fixed-width text report for an agreement matrix: the cross table with
/// counts and shares of all shared questions, then the agreement rate.
pub fn render_matrix(matrix: &AgreementMatrix) -> String {
    let shared = matrix.shared() as f64;
    let mut rows = vec![{
        let mut header = vec![format!("{} \\ {}", matrix.id_a, matrix.id_b)];
        header.extend(
            OutcomeClass::LABELS
                .iter()
                .map(|c| c.as_str().to_string()),
        );
        header
    }];
    for (r, row_class) in OutcomeClass::LABELS.iter().enumerate() {
        let mut row = vec![row_class.as_str().to_string()];
        for c in 0..3 {
            let count = matrix.cells[r][c];
            row.push(cell(count, 100.0 * count as f64 / shared));
        }
        rows.push(row);
    }

    let mut out = render_table(&rows);
    out.push('\n');
    out.push_str(&format!(
        "Agreement: {:.1}% ({} of {} labeled on both sides)\n",
        matrix.agreement_rate(),
        group_thousands(matrix.agreeing()),
        group_thousands(matrix.labeled()),
    ));
    if matrix.excluded > 0 {
        out.push_str(&format!(
            "Excluded: {} shared question(s) without a label on both sides\n",
            group_thousands(matrix.excluded)
        ));
    }
    out
}

/// The matrix counts as CSV, rows `id_a`, columns `id_b`.
pub fn matrix_csv(matrix: &AgreementMatrix) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{},Yes,No,Not Related\n",
        matrix.id_a.replace(',', ";")
    ));
    for (r, row_class) in OutcomeClass::LABELS.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row_class.as_str(),
            matrix.cells[r][0],
            matrix.cells[r][1],
            matrix.cells[r][2]
        ));
    }
    out
}

/// Draw `n` records with the given outcome, uniformly, reproducibly.
///
/// Records are filtered in input order and shuffled with a ChaCha8 stream
/// seeded from `seed`, so the same inputs and seed always select the same
/// records in the same order.
pub fn sample_for_audit(
    records: &[VerificationRecord],
    class: OutcomeClass,
    n: usize,
    seed: u64,
) -> Result<Vec<&VerificationRecord>, AnalysisError> {
    let mut matching: Vec<&VerificationRecord> = records
        .iter()
        .filter(|r| OutcomeClass::of(r) == class)
        .collect();
    if matching.len() < n {
        return Err(AnalysisError::NotEnoughSamples {
            class: class.as_str(),
            requested: n,
            available: matching.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    matching.shuffle(&mut rng);
    matching.truncate(n);
    Ok(matching)
}

/// Human-readable sheet of sampled records for manual auditing.
pub fn render_audit_sheet(samples: &[&VerificationRecord]) -> String {
    let mut out = String::new();
    let separator = "-".repeat(72);
    for (i, record) in samples.iter().enumerate() {
        out.push_str(&format!("#{} qid {}\n", i + 1, record.qid));
        out.push_str(&format!("Question: {}\n", record.question));
        let answer = record
            .answer
            .as_ref()
            .map_or("(none)", |a| a.text.as_str());
        out.push_str(&format!("LLM's Answer: {answer}\n"));
        let retrieved = record.compared.as_deref().unwrap_or("(none)");
        out.push_str(&format!("Retrieved Answer: {retrieved}\n"));
        out.push_str(&format!(
            "Predicted Label: {}\n",
            record.outcome.label_str()
        ));
        out.push_str(&separator);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Stage;

    fn labeled(qid: &str, label: VerificationLabel) -> VerificationRecord {
        VerificationRecord {
            qid: qid.into(),
            question: format!("question {qid}"),
            answer: None,
            retriever_id: Some("test".into()),
            evidence: None,
            compared: Some(format!("evidence for {qid}")),
            outcome: RecordOutcome::Label(label),
            raw: Some(label.as_str().into()),
        }
    }

    fn with_outcome(qid: &str, outcome: RecordOutcome) -> VerificationRecord {
        VerificationRecord {
            qid: qid.into(),
            question: format!("question {qid}"),
            answer: None,
            retriever_id: None,
            evidence: None,
            compared: None,
            outcome,
            raw: None,
        }
    }

    #[test]
    fn distribution_counts_every_class() {
        use VerificationLabel::*;
        let records = vec![
            labeled("q1", Yes),
            labeled("q2", Yes),
            labeled("q3", No),
            labeled("q4", NotRelated),
            with_outcome("q5", RecordOutcome::Unparseable),
            with_outcome("q6", RecordOutcome::NoEvidence { diagnostic: None }),
            with_outcome(
                "q7",
                RecordOutcome::Error {
                    stage: Stage::Generate,
                    message: "x".into(),
                },
            ),
        ];
        let dist = label_distribution(&records).unwrap();
        assert_eq!(dist.total, 7);
        assert_eq!(dist.count(OutcomeClass::Yes), 2);
        assert_eq!(dist.count(OutcomeClass::No), 1);
        assert_eq!(dist.count(OutcomeClass::NotRelated), 1);
        assert_eq!(dist.count(OutcomeClass::Unparseable), 1);
        assert_eq!(dist.count(OutcomeClass::NoEvidence), 1);
        assert_eq!(dist.count(OutcomeClass::Error), 1);
        assert!((dist.percent(OutcomeClass::Yes) - 100.0 * 2.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn empty_record_sets_are_an_error() {
        assert!(matches!(label_distribution(&[]), Err(AnalysisError::Empty)));
    }

    #[test]
    fn thousands_grouping() {
        assert_eq!(group_thousands(0), "0");
        assert_eq!(group_thousands(999), "999");
        assert_eq!(group_thousands(1000), "1,000");
        assert_eq!(group_thousands(6980), "6,980");
        assert_eq!(group_thousands(1234567), "1,234,567");
    }

    #[test]
    fn matrix_tabulates_joined_labels() {
        use VerificationLabel::*;
        let a = vec![
            labeled("q1", Yes),
            labeled("q2", Yes),
            labeled("q3", No),
            labeled("q4", NotRelated),
            with_outcome("q5", RecordOutcome::Unparseable),
            labeled("q6", Yes),
        ];
        let b = vec![
            labeled("q1", Yes),
            labeled("q2", No),
            labeled("q3", No),
            labeled("q4", NotRelated),
            labeled("q5", Yes),
            with_outcome("q6", RecordOutcome::NoEvidence { diagnostic: None }),
            labeled("q7", Yes),
        ];
        let matrix = agreement_matrix("alpha", &a, "beta", &b).unwrap();
        assert_eq!(matrix.shared(), 6, "q7 is not shared");
        assert_eq!(matrix.excluded, 2, "q5 and q6 lack labels on one side");
        assert_eq!(matrix.labeled(), 4);
        // rows and columns in Yes, No, Not Related order
        assert_eq!(matrix.cells[0][0], 1, "q1 yes/yes");
        assert_eq!(matrix.cells[0][1], 1, "q2 yes/no");
        assert_eq!(matrix.cells[1][1], 1, "q3 no/no");
        assert_eq!(matrix.cells[2][2], 1, "q4 not related twice");
        assert_eq!(matrix.agreeing(), 3);
        assert!((matrix.agreement_rate() - 75.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_errors_on_duplicates_and_disjoint_sets() {
        use VerificationLabel::*;
        let dup = vec![labeled("q1", Yes), labeled("q1", No)];
        let ok = vec![labeled("q1", Yes)];
        match agreement_matrix("left", &dup, "right", &ok).unwrap_err() {
            AnalysisError::DuplicateQid { side, qid } => {
                assert_eq!(side, "left");
                assert_eq!(qid, "q1");
            }
            other => panic!("unexpected error: {other}"),
        }

        let a = vec![labeled("q1", Yes)];
        let b = vec![labeled("q2", Yes)];
        assert!(matches!(
            agreement_matrix("a", &a, "b", &b),
            Err(AnalysisError::NoSharedQuestions)
        ));
    }

    #[test]
    fn distribution_render_uses_grouped_counts_and_one_decimal_shares() {
        use VerificationLabel::*;
        let mut records = Vec::new();
        for i in 0..5691 {
            records.push(labeled(&format!("y{i}"), Yes));
        }
        for i in 0..521 {
            records.push(labeled(&format!("n{i}"), No));
        }
        for i in 0..768 {
            records.push(labeled(&format!("r{i}"), NotRelated));
        }
        let dist = label_distribution(&records).unwrap();
        let report = render_distribution("bm25", &dist);
        assert!(report.contains("5,691 (81.5%)"), "{report}");
        assert!(report.contains("521 (7.5%)"), "{report}");
        assert!(report.contains("768 (11.0%)"), "{report}");
        assert!(report.contains("6,980"), "{report}");
        assert!(!report.contains("Unparseable"), "zero aux rows hidden");

        let csv = distribution_csv(&dist);
        assert!(csv.contains("Yes,5691,81.5\n"));
        assert!(csv.contains("No,521,7.5\n"));
        assert!(csv.contains("Not Related,768,11.0\n"));
        assert!(csv.contains("total,6980,100.0\n"));
    }

    #[test]
    fn matrix_render_shows_cells_rate_and_exclusions() {
        let matrix = AgreementMatrix {
            id_a: "bm25".into(),
            id_b: "neural".into(),
            cells: [[5263, 217, 211], [276, 192, 53], [395, 88, 285]],
            excluded: 0,
        };
        let report = render_matrix(&matrix);
        assert!(report.contains("5,263 (75.4%)"), "{report}");
        assert!(report.contains("Agreement: 82.2% (5,740 of 6,980"), "{report}");
        assert!(!report.contains("Excluded"), "{report}");

        let with_exclusions = AgreementMatrix {
            excluded: 12,
            ..matrix.clone()
        };
        let report = render_matrix(&with_exclusions);
        assert!(report.contains("Excluded: 12"), "{report}");

        let csv = matrix_csv(&matrix);
        assert!(csv.starts_with("bm25,Yes,No,Not Related\n"));
        assert!(csv.contains("Yes,5263,217,211\n"));
        assert!(csv.contains("No,276,192,53\n"));
        assert!(csv.contains("Not Related,395,88,285\n"));
    }

    #[test]
    fn sampling_is_reproducible_and_class_pure() {
        use VerificationLabel::*;
        let mut records = Vec::new();
        for i in 0..30 {
            let label = if i % 3 == 0 { Yes } else { No };
            records.push(labeled(&format!("q{i}"), label));
        }
        let first = sample_for_audit(&records, OutcomeClass::Yes, 5, 42).unwrap();
        let second = sample_for_audit(&records, OutcomeClass::Yes, 5, 42).unwrap();
        let qids =
            |sample: &[&VerificationRecord]| -> Vec<String> {
                sample.iter().map(|r| r.qid.clone()).collect()
            };
        assert_eq!(qids(&first), qids(&second));
        assert_eq!(first.len(), 5);
        for record in &first {
            assert_eq!(OutcomeClass::of(record), OutcomeClass::Yes);
        }

        let everything = sample_for_audit(&records, OutcomeClass::Yes, 10, 7).unwrap();
        assert_eq!(everything.len(), 10, "exactly the population size");

        match sample_for_audit(&records, OutcomeClass::Yes, 11, 7).unwrap_err() {
            AnalysisError::NotEnoughSamples {
                requested,
                available,
                ..
            } => {
                assert_eq!(requested, 11);
                assert_eq!(available, 10);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn different_seeds_usually_disagree() {
        use VerificationLabel::*;
        let records: Vec<VerificationRecord> = (0..100)
            .map(|i| labeled(&format!("q{i}"), Yes))
            .collect();
        let a: Vec<String> = sample_for_audit(&records, OutcomeClass::Yes, 10, 1)
            .unwrap()
            .iter()
            .map(|r| r.qid.clone())
            .collect();
        let b: Vec<String> = sample_for_audit(&records, OutcomeClass::Yes, 10, 2)
            .unwrap()
            .iter()
            .map(|r| r.qid.clone())
            .collect();
        assert_ne!(a, b, "10 of 100 under two seeds matching is vanishingly unlikely");
    }

    #[test]
    fn audit_sheet_lays_out_the_four_fields() {
        use VerificationLabel::*;
        let mut record = labeled("q1", Yes);
        record.answer = Some(crate::pipeline::GeneratedAnswer {
            qid: "q1".into(),
            text: "the answer".into(),
            model_id: "m".into(),
            temperature: 0.0,
        });
        let records = [&record];
        let sheet = render_audit_sheet(&records);
        let question_at = sheet.find("Question: question q1").unwrap();
        let answer_at = sheet.find("LLM's Answer: the answer").unwrap();
        let retrieved_at = sheet.find("Retrieved Answer: evidence for q1").unwrap();
        let label_at = sheet.find("Predicted Label: Yes").unwrap();
        assert!(question_at < answer_at);
        assert!(answer_at < retrieved_at);
        assert!(retrieved_at < label_at);
        assert!(sheet.contains("----"));
    }

    #[test]
    fn outcome_class_parsing_matches_wire_spellings() {
        assert_eq!(OutcomeClass::parse("Yes"), Some(OutcomeClass::Yes));
        assert_eq!(OutcomeClass::parse("not related"), Some(OutcomeClass::NotRelated));
        assert_eq!(OutcomeClass::parse("NOEVIDENCE"), Some(OutcomeClass::NoEvidence));
        assert_eq!(OutcomeClass::parse("bogus"), None);
    }
}
