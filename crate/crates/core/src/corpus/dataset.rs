//! Finalized dataset rows, the human review round trip, audit
//! selection, and statistics.
//!
//! Review is file-based: `review_queue` exports the rows a human must
//! look at, the human fills `final_label` and `reviewer` in that file,
//! and `reconcile` validates the edited file and applies it atomically
//! (any invalid entry rejects the whole file before a single row
//! changes).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    consensus, parse_jsonl, write_jsonl, AnnotationRecord, ConsensusOutcome, CorpusError, Outcome,
    Sentence,
};
use crate::gsd::Label;

/// One dataset row: the sentence, every annotator's vote, and the
/// consensus outcome (which carries the final label once resolved).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub sentence: Sentence,
    pub annotations: Vec<AnnotationRecord>,
    pub outcome: ConsensusOutcome,
}

/// Per-class sentence counts of a finalized dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub consent: usize,
    pub instruction: usize,
    pub neither: usize,
    pub total: usize,
}

/// One row of the review file. `votes` and `proposed` are filled on
/// export; a human fills `final_label` and `reviewer`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewEntry {
    pub sentence_id: String,
    pub text: String,
    pub votes: BTreeMap<Label, usize>,
    pub proposed: Option<Label>,
    #[serde(default)]
    pub final_label: Option<Label>,
    #[serde(default)]
    pub reviewer: Option<String>,
}

/// What a reconcile pass did: `applied` entries resolved a row,
/// `pending` entries were still unfilled, `overridden` counts applied
/// entries whose label replaced a different existing final label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReconcileSummary {
    pub applied: usize,
    pub pending: usize,
    pub overridden: usize,
}

/// Statistics over a finalized dataset. The human-vs-consensus figures
/// cover exactly the human-reviewed rows: `comparable` restricts to
/// those whose annotators were unanimous (the only rows where a model
/// consensus exists to agree with).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub counts: DatasetStats,
    pub disagreement_rate: f64,
    pub anomalies: usize,
    pub human_reviewed: usize,
    pub human_consensus_comparable: usize,
    pub human_consensus_agreements: usize,
    pub human_consensus_agreement_rate: Option<f64>,
}

/// Pair sentences with their annotation records and reduce each group
/// to a consensus outcome. A sentence with no records at all is
/// omitted (its annotation attempts are in the run's failure list); a
/// record naming an unknown sentence is an error.
pub fn build_dataset(
    sentences: &[Sentence],
    records: &[AnnotationRecord],
) -> Result<Vec<DatasetRecord>, CorpusError> {
    let known: BTreeSet<&str> = sentences.iter().map(|s| s.id.as_str()).collect();
    let mut grouped: BTreeMap<&str, Vec<AnnotationRecord>> = BTreeMap::new();
    for record in records {
        if !known.contains(record.sentence_id.as_str()) {
            return Err(CorpusError::OrphanRecord {
                sentence_id: record.sentence_id.clone(),
            });
        }
        grouped
            .entry(record.sentence_id.as_str())
            .or_default()
            .push(record.clone());
    }
    let mut out = Vec::new();
    for sentence in sentences {
        let Some(annotations) = grouped.remove(sentence.id.as_str()) else {
            continue;
        };
        let outcome = consensus(&annotations)?;
        out.push(DatasetRecord {
            sentence: sentence.clone(),
            annotations,
            outcome,
        });
    }
    Ok(out)
}

/// Pick the audit sample: the longest fifth (by character count,
/// rounded up) of the sentences finalized as Neither. Ties keep input
/// order, earlier rows first.
pub fn audit_selection(records: &[DatasetRecord]) -> Vec<String> {
    let mut neither: Vec<&DatasetRecord> = records
        .iter()
        .filter(|r| r.outcome.final_label == Some(Label::Neither))
        .collect();
    neither.sort_by_key(|r| std::cmp::Reverse(r.sentence.text.chars().count()));
    let take = neither.len().div_ceil(5);
    neither
        .into_iter()
        .take(take)
        .map(|r| r.sentence.id.clone())
        .collect()
}

/// Count final labels. Every row must be resolved; unresolved rows are
/// reported as an error rather than silently skipped.
pub fn dataset_stats(records: &[DatasetRecord]) -> Result<DatasetStats, CorpusError> {
    let mut stats = DatasetStats::default();
    let mut unresolved = 0usize;
    for record in records {
        match record.outcome.final_label {
            Some(Label::Consent) => stats.consent += 1,
            Some(Label::Instruction) => stats.instruction += 1,
            Some(Label::Neither) => stats.neither += 1,
            Some(Label::Unknown) => {
                return Err(CorpusError::UnknownLabel {
                    sentence_id: record.sentence.id.clone(),
                })
            }
            None => unresolved += 1,
        }
    }
    if unresolved > 0 {
        return Err(CorpusError::Unresolved { count: unresolved });
    }
    stats.total = stats.consent + stats.instruction + stats.neither;
    Ok(stats)
}

/// Export the rows a human must review: every split and every
/// unanimous Consent/Instruction verdict, in dataset order.
pub fn review_queue(records: &[DatasetRecord]) -> Vec<ReviewEntry> {
    records
        .iter()
        .filter(|r| r.outcome.needs_review)
        .map(|r| {
            let mut votes: BTreeMap<Label, usize> = BTreeMap::new();
            for a in &r.annotations {
                *votes.entry(a.label).or_insert(0) += 1;
            }
            ReviewEntry {
                sentence_id: r.sentence.id.clone(),
                text: r.sentence.text.clone(),
                votes,
                proposed: match &r.outcome.outcome {
                    Outcome::Unanimous(label) => Some(*label),
                    Outcome::Split(_) => None,
                },
                final_label: None,
                reviewer: None,
            }
        })
        .collect()
}

/// Apply an edited review file. The whole file is validated first;
/// any invalid entry rejects it before a single row changes. Entries
/// with `final_label` still unset are counted as pending and skipped.
/// An applied entry may also correct an already-final row (the audit
/// path), which counts as overridden when the label changes.
pub fn reconcile(
    records: &mut [DatasetRecord],
    entries: &[ReviewEntry],
) -> Result<ReconcileSummary, CorpusError> {
    let index: BTreeMap<&str, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.sentence.id.as_str(), i))
        .collect();

    struct Apply {
        row: usize,
        label: Label,
        reviewer: String,
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut applies: Vec<Apply> = Vec::new();
    let mut pending = 0usize;
    for entry in entries {
        if !seen.insert(entry.sentence_id.as_str()) {
            return Err(CorpusError::DuplicateReview {
                sentence_id: entry.sentence_id.clone(),
            });
        }
        let Some(&row) = index.get(entry.sentence_id.as_str()) else {
            return Err(CorpusError::UnknownReviewSentence {
                sentence_id: entry.sentence_id.clone(),
            });
        };
        let Some(label) = entry.final_label else {
            pending += 1;
            continue;
        };
        if label == Label::Unknown {
            return Err(CorpusError::UnknownLabel {
                sentence_id: entry.sentence_id.clone(),
            });
        }
        let reviewer = entry
            .reviewer
            .as_deref()
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| CorpusError::MissingReviewer {
                sentence_id: entry.sentence_id.clone(),
            })?;
        applies.push(Apply {
            row,
            label,
            reviewer: reviewer.to_string(),
        });
    }

    let mut summary = ReconcileSummary {
        applied: 0,
        pending,
        overridden: 0,
    };
    for apply in applies {
        let outcome = &mut records[apply.row].outcome;
        if outcome.final_label.is_some_and(|prev| prev != apply.label) {
            summary.overridden += 1;
        }
        outcome.final_label = Some(apply.label);
        outcome.resolved_by = Some(apply.reviewer);
        outcome.needs_review = false;
        summary.applied += 1;
    }
    Ok(summary)
}

/// Full statistics over a finalized dataset: class counts, the
/// annotator disagreement rate, anomaly count, and human-vs-consensus
/// agreement over the human-reviewed rows.
pub fn stats_report(records: &[DatasetRecord]) -> Result<StatsReport, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    let counts = dataset_stats(records)?;
    let split = records
        .iter()
        .filter(|r| matches!(r.outcome.outcome, Outcome::Split(_)))
        .count();
    let anomalies = records
        .iter()
        .flat_map(|r| &r.annotations)
        .filter(|a| a.anomaly)
        .count();

    let mut human_reviewed = 0usize;
    let mut comparable = 0usize;
    let mut agreements = 0usize;
    for record in records {
        if record.outcome.resolved_by.is_none() {
            continue;
        }
        human_reviewed += 1;
        let Outcome::Unanimous(proposed) = &record.outcome.outcome else {
            continue;
        };
        comparable += 1;
        if record.outcome.final_label == Some(*proposed) {
            agreements += 1;
        }
    }
    Ok(StatsReport {
        counts,
        disagreement_rate: split as f64 / records.len() as f64,
        anomalies,
        human_reviewed,
        human_consensus_comparable: comparable,
        human_consensus_agreements: agreements,
        human_consensus_agreement_rate: (comparable > 0)
            .then(|| agreements as f64 / comparable as f64),
    })
}

/// Serialize dataset rows as JSON lines.
pub fn write_dataset(records: &[DatasetRecord]) -> String {
    write_jsonl(records)
}

/// Parse a dataset written by [`write_dataset`].
pub fn parse_dataset(text: &str) -> Result<Vec<DatasetRecord>, CorpusError> {
    parse_jsonl(text)
}

/// Serialize a review queue as JSON lines.
pub fn write_review_queue(entries: &[ReviewEntry]) -> String {
    write_jsonl(entries)
}

/// Parse a (possibly human-edited) review file.
pub fn parse_review_queue(text: &str) -> Result<Vec<ReviewEntry>, CorpusError> {
    parse_jsonl(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(id: &str, text: &str) -> Sentence {
        Sentence {
            id: id.to_string(),
            text: text.to_string(),
            start: 0.0,
            end: 1.0,
            source_id: "v1".to_string(),
            fragment: false,
        }
    }

    fn record(id: &str, annotator: &str, label: Label) -> AnnotationRecord {
        AnnotationRecord {
            sentence_id: id.to_string(),
            annotator: annotator.to_string(),
            label,
            reasoning: String::new(),
            anomaly: false,
        }
    }

    fn row(id: &str, text: &str, labels: &[Label]) -> DatasetRecord {
        let annotations: Vec<AnnotationRecord> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| record(id, &format!("m{i}"), *l))
            .collect();
        let outcome = consensus(&annotations).unwrap();
        DatasetRecord {
            sentence: sentence(id, text),
            annotations,
            outcome,
        }
    }

    #[test]
    fn dataset_pairs_sentences_with_their_records() {
        let sentences = [
            sentence("s1", "Sit down."),
            sentence("s2", "Hello."),
            sentence("s3", "No records here."),
        ];
        let records = [
            record("s1", "m1", Label::Instruction),
            record("s1", "m2", Label::Instruction),
            record("s2", "m1", Label::Neither),
            record("s2", "m2", Label::Neither),
        ];
        let dataset = build_dataset(&sentences, &records).unwrap();
        assert_eq!(dataset.len(), 2);
        assert_eq!(dataset[0].sentence.id, "s1");
        assert_eq!(dataset[0].annotations.len(), 2);
        assert_eq!(
            dataset[0].outcome.outcome,
            Outcome::Unanimous(Label::Instruction)
        );
        assert_eq!(dataset[1].outcome.final_label, Some(Label::Neither));
    }

    #[test]
    fn record_for_unknown_sentence_is_rejected() {
        let sentences = [sentence("s1", "Sit down.")];
        let records = [record("ghost", "m1", Label::Neither)];
        assert!(matches!(
            build_dataset(&sentences, &records),
            Err(CorpusError::OrphanRecord { .. })
        ));
    }

    #[test]
    fn audit_picks_longest_fifth_of_neither_rows() {
        let mut records = Vec::new();
        for i in 0..10 {
            let text = "x".repeat(i + 1);
            records.push(row(&format!("s{i}"), &text, &[Label::Neither, Label::Neither]));
        }
        // A long Instruction row must not be selected.
        records.push(row("inst", &"y".repeat(50), &[Label::Instruction, Label::Instruction]));

        let picked = audit_selection(&records);
        assert_eq!(picked, vec!["s9".to_string(), "s8".to_string()]);
    }

    #[test]
    fn audit_tie_keeps_earlier_row() {
        let records = vec![
            row("s1", "aaaaa", &[Label::Neither]),
            row("s2", "bbbbb", &[Label::Neither]),
            row("s3", "cc", &[Label::Neither]),
        ];
        assert_eq!(audit_selection(&records), vec!["s1".to_string()]);
        assert_eq!(audit_selection(&[]), Vec::<String>::new());
    }

    #[test]
    fn stats_count_final_labels() {
        let records = vec![
            row("s1", "a", &[Label::Consent, Label::Consent]),
            row("s2", "b", &[Label::Instruction, Label::Instruction]),
            row("s3", "c", &[Label::Instruction, Label::Instruction]),
            row("s4", "d", &[Label::Neither, Label::Neither]),
            row("s5", "e", &[Label::Neither, Label::Neither]),
        ];
        let stats = dataset_stats(&records).unwrap();
        assert_eq!(
            stats,
            DatasetStats {
                consent: 1,
                instruction: 2,
                neither: 2,
                total: 5
            }
        );
        assert_eq!(dataset_stats(&[]).unwrap(), DatasetStats::default());
    }

    #[test]
    fn unresolved_rows_block_stats() {
        let records = vec![
            row("s1", "a", &[Label::Neither, Label::Neither]),
            row("s2", "b", &[Label::Consent, Label::Neither]),
        ];
        assert!(matches!(
            dataset_stats(&records),
            Err(CorpusError::Unresolved { count: 1 })
        ));
    }

    #[test]
    fn review_round_trip_resolves_rows() {
        let mut records = vec![
            row("s1", "Raise your arm.", &[Label::Instruction, Label::Instruction]),
            row("s2", "May I?", &[Label::Consent, Label::Neither]),
            row("s3", "Nice weather.", &[Label::Neither, Label::Neither]),
        ];
        let queue = review_queue(&records);
        assert_eq!(queue.len(), 2);
        assert_eq!(queue[0].sentence_id, "s1");
        assert_eq!(queue[0].proposed, Some(Label::Instruction));
        assert_eq!(queue[1].sentence_id, "s2");
        assert_eq!(queue[1].proposed, None);
        assert_eq!(queue[1].votes.get(&Label::Consent), Some(&1));

        let mut edited = queue.clone();
        edited[0].final_label = Some(Label::Instruction);
        edited[0].reviewer = Some("alice".into());
        edited[1].final_label = Some(Label::Consent);
        edited[1].reviewer = Some("alice".into());

        let summary = reconcile(&mut records, &edited).unwrap();
        assert_eq!(
            summary,
            ReconcileSummary {
                applied: 2,
                pending: 0,
                overridden: 0
            }
        );
        assert!(records.iter().all(|r| !r.outcome.needs_review));
        assert_eq!(records[1].outcome.final_label, Some(Label::Consent));
        assert_eq!(records[1].outcome.resolved_by.as_deref(), Some("alice"));

        let report = stats_report(&records).unwrap();
        assert_eq!(report.counts.total, 3);
        assert_eq!(report.counts.consent, 1);
        assert!((report.disagreement_rate - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.human_reviewed, 2);
        assert_eq!(report.human_consensus_comparable, 1);
        assert_eq!(report.human_consensus_agreements, 1);
        assert_eq!(report.human_consensus_agreement_rate, Some(1.0));
    }

    #[test]
    fn human_override_counts_as_disagreement_with_consensus() {
        let mut records = vec![row(
            "s1",
            "Raise your arm.",
            &[Label::Instruction, Label::Instruction],
        )];
        let mut queue = review_queue(&records);
        queue[0].final_label = Some(Label::Neither);
        queue[0].reviewer = Some("bob".into());
        let summary = reconcile(&mut records, &queue).unwrap();
        assert_eq!(summary.applied, 1);
        assert_eq!(summary.overridden, 1);
        assert_eq!(records[0].outcome.final_label, Some(Label::Neither));
        // The unanimous vote record is preserved for the report.
        assert_eq!(
            records[0].outcome.outcome,
            Outcome::Unanimous(Label::Instruction)
        );
        let report = stats_report(&records).unwrap();
        assert_eq!(report.human_consensus_agreement_rate, Some(0.0));
    }

    #[test]
    fn unfilled_entries_stay_pending() {
        let mut records = vec![row("s1", "May I?", &[Label::Consent, Label::Neither])];
        let queue = review_queue(&records);
        let summary = reconcile(&mut records, &queue).unwrap();
        assert_eq!(
            summary,
            ReconcileSummary {
                applied: 0,
                pending: 1,
                overridden: 0
            }
        );
        assert!(records[0].outcome.needs_review);
    }

    #[test]
    fn invalid_review_file_changes_nothing() {
        let mut records = vec![
            row("s1", "Raise your arm.", &[Label::Instruction, Label::Instruction]),
            row("s2", "May I?", &[Label::Consent, Label::Neither]),
        ];
        let good = ReviewEntry {
            sentence_id: "s2".into(),
            text: "May I?".into(),
            votes: BTreeMap::new(),
            proposed: None,
            final_label: Some(Label::Consent),
            reviewer: Some("alice".into()),
        };
        let bad = ReviewEntry {
            sentence_id: "ghost".into(),
            ..good.clone()
        };
        let before = records.clone();
        assert!(matches!(
            reconcile(&mut records, &[good.clone(), bad]),
            Err(CorpusError::UnknownReviewSentence { .. })
        ));
        assert_eq!(records, before);

        let unsigned = ReviewEntry {
            reviewer: Some("  ".into()),
            ..good.clone()
        };
        assert!(matches!(
            reconcile(&mut records, &[unsigned]),
            Err(CorpusError::MissingReviewer { .. })
        ));

        let duplicated = [good.clone(), good.clone()];
        assert!(matches!(
            reconcile(&mut records, &duplicated),
            Err(CorpusError::DuplicateReview { .. })
        ));

        let unknown_label = ReviewEntry {
            final_label: Some(Label::Unknown),
            ..good
        };
        assert!(matches!(
            reconcile(&mut records, &[unknown_label]),
            Err(CorpusError::UnknownLabel { .. })
        ));
        assert_eq!(records, before);
    }

    #[test]
    fn stats_report_requires_rows() {
        assert!(matches!(
            stats_report(&[]),
            Err(CorpusError::EmptyDataset)
        ));
    }

    #[test]
    fn dataset_and_review_files_round_trip() {
        let records = vec![
            row("s1", "Raise your arm.", &[Label::Instruction, Label::Instruction]),
            row("s2", "May I?", &[Label::Consent, Label::Neither]),
        ];
        let text = write_dataset(&records);
        assert_eq!(text.lines().count(), 2);
        let parsed = parse_dataset(&text).unwrap();
        assert_eq!(parsed, records);

        let queue = review_queue(&records);
        let queue_text = write_review_queue(&queue);
        let parsed_queue = parse_review_queue(&queue_text).unwrap();
        assert_eq!(parsed_queue, queue);

        assert!(matches!(
            parse_dataset("not json"),
            Err(CorpusError::Jsonl { line: 1, .. })
        ));
    }
}
