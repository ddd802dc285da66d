//! Corpus construction: reassembles full sentences from ASR segments,
//! fans sentences out to multiple annotation backends, reduces the
//! votes to consensus outcomes, and selects audit samples.
//!
//! Sentences are reconstructed per source: consecutive segments are
//! joined with single spaces until one ends in `.`, `?`, or `!`
//! (periods that close the honorifics Dr., Mr., Mrs., Ms. do not
//! terminate). Unterminated trailing text still becomes a sentence,
//! flagged as a fragment. Whitespace-only segments are ignored.

mod dataset;

pub use dataset::{
    audit_selection, build_dataset, dataset_stats, parse_dataset, parse_review_queue, reconcile,
    review_queue, stats_report, write_dataset, write_review_queue, DatasetRecord, DatasetStats,
    ReconcileSummary, ReviewEntry, StatsReport,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gsd::{classify, Label, PromptTemplate};
use crate::llm::{parallel_map, Backend};

/// One transcription fragment with aligned timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsrSegment {
    pub text: String,
    pub start: f64,
    pub end: f64,
    pub source_id: String,
}

/// One reconstructed sentence. `start`/`end` span every contributing
/// segment; `fragment` marks trailing text that never reached terminal
/// punctuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub start: f64,
    pub end: f64,
    pub source_id: String,
    #[serde(default)]
    pub fragment: bool,
}

/// One annotator's vote on one sentence. `label` is always a ground
/// truth category; an UNKNOWN parse never reaches a record (it falls
/// back to Neither with `anomaly` set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sentence_id: String,
    pub annotator: String,
    pub label: Label,
    pub reasoning: String,
    #[serde(default)]
    pub anomaly: bool,
}

/// One sentence x annotator pair that produced no record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFailure {
    pub sentence_id: String,
    pub annotator: String,
    pub error: String,
}

/// Everything an annotation pass produced. Failures are collected, not
/// fatal: a sentence missing from `records` appears in `failures`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRun {
    pub records: Vec<AnnotationRecord>,
    pub failures: Vec<AnnotationFailure>,
}

/// How one sentence's annotators lined up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Unanimous(Label),
    Split(BTreeMap<Label, usize>),
}

/// Consensus over one sentence's annotation records. `final_label` is
/// present iff the annotators were unanimous or a human resolved the
/// sentence; `needs_review` queues unanimous Consent/Instruction
/// verdicts and every split for a human.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusOutcome {
    pub sentence_id: String,
    pub outcome: Outcome,
    pub final_label: Option<Label>,
    pub resolved_by: Option<String>,
    pub needs_review: bool,
}

/// One cut-list row for external video tooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRow {
    pub sentence_id: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Jsonl { line: usize, reason: String },
    #[error("segment {index} of source {source_id} is invalid: {reason}")]
    InvalidSegment {
        source_id: String,
        index: usize,
        reason: String,
    },
    #[error(
        "segments of source {source_id} are out of order: segment {index} starts at {start} \
         before the previous one ends at {prev_end}"
    )]
    SegmentOrdering {
        source_id: String,
        index: usize,
        start: f64,
        prev_end: f64,
    },
    #[error("sentence {id} has an empty time span")]
    EmptySpan { id: String },
    #[error("padding must be finite and non-negative, got {padding}")]
    InvalidPadding { padding: f64 },
    #[error("at least one annotation backend is required")]
    NoBackends,
    #[error("consensus requires at least one annotation record")]
    EmptyGroup,
    #[error("annotation group mixes sentences {a} and {b}")]
    MixedGroup { a: String, b: String },
    #[error("record for sentence {sentence_id} carries an UNKNOWN label")]
    UnknownLabel { sentence_id: String },
    #[error("disagreement rate is undefined without outcomes")]
    EmptyOutcomes,
    #[error("statistics are undefined on an empty dataset")]
    EmptyDataset,
    #[error("{count} sentences still lack a final label")]
    Unresolved { count: usize },
    #[error("annotation record references unknown sentence {sentence_id}")]
    OrphanRecord { sentence_id: String },
    #[error("review queue names unknown sentence {sentence_id}")]
    UnknownReviewSentence { sentence_id: String },
    #[error("review queue lists sentence {sentence_id} twice")]
    DuplicateReview { sentence_id: String },
    #[error("review entry for {sentence_id} sets a label but names no reviewer")]
    MissingReviewer { sentence_id: String },
}

/// Parse a JSON-lines document; blank lines are skipped and malformed
/// lines reported by number.
pub(crate) fn parse_jsonl<T: serde::de::DeserializeOwned>(
    text: &str,
) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| CorpusError::Jsonl {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

pub(crate) fn write_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("corpus types serialize to json"));
        out.push('\n');
    }
    out
}

/// Parse segments from JSON lines `{text, start, end, source_id}`.
pub fn parse_segments(text: &str) -> Result<Vec<AsrSegment>, CorpusError> {
    parse_jsonl(text)
}

/// Serialize sentences as JSON lines.
pub fn write_sentences(sentences: &[Sentence]) -> String {
    write_jsonl(sentences)
}

/// Parse sentences written by [`write_sentences`].
pub fn parse_sentences(text: &str) -> Result<Vec<Sentence>, CorpusError> {
    parse_jsonl(text)
}

/// Serialize annotation failures as JSON lines.
pub fn write_failures(failures: &[AnnotationFailure]) -> String {
    write_jsonl(failures)
}

/// Periods closing these abbreviations do not terminate a sentence.
const HONORIFICS: [&str; 4] = ["Dr.", "Mr.", "Mrs.", "Ms."];

fn ends_sentence(fragment: &str) -> bool {
    let t = fragment.trim_end();
    let Some(last) = t.chars().last() else {
        return false;
    };
    if !matches!(last, '.' | '?' | '!') {
        return false;
    }
    if last == '.' {
        let last_word = t.rsplit(char::is_whitespace).next().unwrap_or(t);
        if HONORIFICS.contains(&last_word) {
            return false;
        }
    }
    true
}

/// Rebuild sentences from ordered segments. Sources may interleave in
/// the input; output groups sources in first-appearance order, each
/// source's sentences in time order with ids `{source_id}_{seq:04}`.
pub fn merge_segments(segments: &[AsrSegment]) -> Result<Vec<Sentence>, CorpusError> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_source: BTreeMap<&str, Vec<&AsrSegment>> = BTreeMap::new();
    for seg in segments {
        by_source
            .entry(seg.source_id.as_str())
            .or_insert_with(|| {
                order.push(&seg.source_id);
                Vec::new()
            })
            .push(seg);
    }
    let mut sentences = Vec::new();
    for source in order {
        merge_one_source(source, &by_source[source], &mut sentences)?;
    }
    Ok(sentences)
}

fn merge_one_source(
    source_id: &str,
    segments: &[&AsrSegment],
    out: &mut Vec<Sentence>,
) -> Result<(), CorpusError> {
    let mut seq = 0usize;
    let mut text = String::new();
    let mut span: Option<(f64, f64)> = None;
    let mut prev_end: Option<f64> = None;

    let flush = |text: &mut String,
                     span: &mut Option<(f64, f64)>,
                     seq: &mut usize,
                     fragment: bool,
                     out: &mut Vec<Sentence>|
     -> Result<(), CorpusError> {
        let (start, end) = span.take().expect("flush only called with accumulated text");
        *seq += 1;
        let id = format!("{source_id}_{seq:04}");
        if start >= end {
            return Err(CorpusError::EmptySpan { id });
        }
        out.push(Sentence {
            id,
            text: std::mem::take(text),
            start,
            end,
            source_id: source_id.to_string(),
            fragment,
        });
        Ok(())
    };

    for (index, seg) in segments.iter().enumerate() {
        if !seg.start.is_finite() || !seg.end.is_finite() || seg.start < 0.0 || seg.end < seg.start
        {
            return Err(CorpusError::InvalidSegment {
                source_id: source_id.to_string(),
                index,
                reason: format!("time span {}..{} is not usable", seg.start, seg.end),
            });
        }
        if let Some(prev_end) = prev_end {
            if seg.start < prev_end {
                return Err(CorpusError::SegmentOrdering {
                    source_id: source_id.to_string(),
                    index,
                    start: seg.start,
                    prev_end,
                });
            }
        }
        prev_end = Some(seg.end);

        let piece = seg.text.trim();
        if piece.is_empty() {
            continue;
        }
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(piece);
        span = Some(match span {
            None => (seg.start, seg.end),
            Some((start, _)) => (start, seg.end),
        });
        if ends_sentence(piece) {
            flush(&mut text, &mut span, &mut seq, false, out)?;
        }
    }
    if !text.is_empty() {
        flush(&mut text, &mut span, &mut seq, true, out)?;
    }
    Ok(())
}

/// Pad each sentence's span for clipping: start is floored at zero,
/// the end is extended unconditionally.
pub fn clip_boundaries(
    sentences: &[Sentence],
    padding: f64,
) -> Result<Vec<ClipRow>, CorpusError> {
    if !padding.is_finite() || padding < 0.0 {
        return Err(CorpusError::InvalidPadding { padding });
    }
    Ok(sentences
        .iter()
        .map(|s| ClipRow {
            sentence_id: s.id.clone(),
            start: (s.start - padding).max(0.0),
            end: s.end + padding,
        })
        .collect())
}

/// Render a cut list as CSV with a `sentence_id,start,end` header.
pub fn write_cut_list(rows: &[ClipRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sentence_id", "start", "end"])
        .expect("in-memory csv write cannot fail");
    for row in rows {
        w.write_record([
            row.sentence_id.as_str(),
            &row.start.to_string(),
            &row.end.to_string(),
        ])
        .expect("in-memory csv write cannot fail");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush cannot fail"))
        .expect("csv output is utf-8")
}

/// Annotate every sentence with every backend, at most `concurrency`
/// requests in flight. Output order is sentence-major then backend
/// order, independent of completion timing. An UNKNOWN parse is
/// re-asked once, then recorded as Neither with `anomaly` set.
/// Transport failures land in `failures` instead of aborting the run.
pub fn annotate_corpus(
    sentences: &[Sentence],
    backends: &[(&str, &dyn Backend)],
    template: &PromptTemplate,
    concurrency: usize,
) -> Result<AnnotationRun, CorpusError> {
    if backends.is_empty() {
        return Err(CorpusError::NoBackends);
    }
    let mut jobs: Vec<(&Sentence, &str, &dyn Backend)> =
        Vec::with_capacity(sentences.len() * backends.len());
    for sentence in sentences {
        for &(name, backend) in backends {
            jobs.push((sentence, name, backend));
        }
    }
    let results = parallel_map(&jobs, concurrency, |_, &(sentence, name, backend)| {
        annotate_one(sentence, name, backend, template)
    });
    let mut run = AnnotationRun {
        records: Vec::new(),
        failures: Vec::new(),
    };
    for result in results {
        match result {
            Ok(record) => run.records.push(record),
            Err(failure) => run.failures.push(failure),
        }
    }
    Ok(run)
}

fn annotate_one(
    sentence: &Sentence,
    annotator: &str,
    backend: &dyn Backend,
    template: &PromptTemplate,
) -> Result<AnnotationRecord, AnnotationFailure> {
    let fail = |error: String| AnnotationFailure {
        sentence_id: sentence.id.clone(),
        annotator: annotator.to_string(),
        error,
    };
    let first = classify(backend, template, &sentence.id, &sentence.text)
        .map_err(|e| fail(e.to_string()))?;
    let (label, reasoning, anomaly) = if first.label != Label::Unknown {
        (first.label, first.reasoning, false)
    } else {
        let second = classify(backend, template, &sentence.id, &sentence.text)
            .map_err(|e| fail(e.to_string()))?;
        if second.label != Label::Unknown {
            (second.label, second.reasoning, false)
        } else {
            (Label::Neither, second.reasoning, true)
        }
    };
    Ok(AnnotationRecord {
        sentence_id: sentence.id.clone(),
        annotator: annotator.to_string(),
        label,
        reasoning,
        anomaly,
    })
}

/// Reduce one sentence's records to a consensus outcome. All-equal
/// votes are Unanimous and carry a final label; anything else is Split
/// and waits for a human. Unanimous Consent/Instruction still sets
/// `needs_review`: those verdicts trigger robot motion, so a human
/// confirms each one. The result depends only on the vote multiset,
/// not on annotator order.
pub fn consensus(records: &[AnnotationRecord]) -> Result<ConsensusOutcome, CorpusError> {
    let Some(first) = records.first() else {
        return Err(CorpusError::EmptyGroup);
    };
    let sentence_id = first.sentence_id.clone();
    let mut votes: BTreeMap<Label, usize> = BTreeMap::new();
    for record in records {
        if record.sentence_id != sentence_id {
            return Err(CorpusError::MixedGroup {
                a: sentence_id,
                b: record.sentence_id.clone(),
            });
        }
        if record.label == Label::Unknown {
            return Err(CorpusError::UnknownLabel {
                sentence_id: record.sentence_id.clone(),
            });
        }
        *votes.entry(record.label).or_insert(0) += 1;
    }
    if votes.len() == 1 {
        let label = *votes.keys().next().expect("votes is non-empty");
        Ok(ConsensusOutcome {
            sentence_id,
            outcome: Outcome::Unanimous(label),
            final_label: Some(label),
            resolved_by: None,
            needs_review: label != Label::Neither,
        })
    } else {
        Ok(ConsensusOutcome {
            sentence_id,
            outcome: Outcome::Split(votes),
            final_label: None,
            resolved_by: None,
            needs_review: true,
        })
    }
}

/// Fraction of outcomes where the annotators did not all agree.
pub fn disagreement_rate(outcomes: &[ConsensusOutcome]) -> Result<f64, CorpusError> {
    if outcomes.is_empty() {
        return Err(CorpusError::EmptyOutcomes);
    }
    let split = outcomes
        .iter()
        .filter(|o| matches!(o.outcome, Outcome::Split(_)))
        .count();
    Ok(split as f64 / outcomes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{MockBackend, MockFixture, MockMode};
    use proptest::prelude::*;

    fn seg(text: &str, start: f64, end: f64, source: &str) -> AsrSegment {
        AsrSegment {
            text: text.to_string(),
            start,
            end,
            source_id: source.to_string(),
        }
    }

    #[test]
    fn joins_fragments_into_one_sentence() {
        let sentences = merge_segments(&[
            seg("Please raise", 0.0, 1.2, "v1"),
            seg("your arm.", 1.2, 2.0, "v1"),
        ])
        .unwrap();
        assert_eq!(sentences.len(), 1);
        let s = &sentences[0];
        assert_eq!(s.text, "Please raise your arm.");
        assert_eq!((s.start, s.end), (0.0, 2.0));
        assert_eq!(s.id, "v1_0001");
        assert!(!s.fragment);
    }

    #[test]
    fn single_terminated_segment_passes_through() {
        let sentences = merge_segments(&[seg("Okay.", 3.0, 3.5, "v1")]).unwrap();
        assert_eq!(sentences.len(), 1);
        assert_eq!(sentences[0].text, "Okay.");
        assert_eq!((sentences[0].start, sentences[0].end), (3.0, 3.5));
    }

    #[test]
    fn empty_input_gives_empty_output() {
        assert_eq!(merge_segments(&[]).unwrap(), Vec::new());
    }

    #[test]
    fn honorific_period_does_not_terminate() {
        let sentences = merge_segments(&[
            seg("You should see Dr.", 0.0, 1.0, "v1"),
            seg("Gill tomorrow.", 1.0, 2.0, "v1"),
        ])
        .unwrap();
        assert_eq!(sentences.len(), 1);
        assert_eq!(sentences[0].text, "You should see Dr. Gill tomorrow.");
    }

    #[test]
    fn trailing_text_becomes_flagged_fragment() {
        let sentences = merge_segments(&[
            seg("Stand up.", 0.0, 1.0, "v1"),
            seg("and then we", 1.0, 2.0, "v1"),
        ])
        .unwrap();
        assert_eq!(sentences.len(), 2);
        assert!(!sentences[0].fragment);
        assert!(sentences[1].fragment);
        assert_eq!(sentences[1].text, "and then we");
        assert_eq!(sentences[1].id, "v1_0002");
    }

    #[test]
    fn question_and_exclamation_terminate() {
        let sentences = merge_segments(&[
            seg("May I check", 0.0, 1.0, "v1"),
            seg("your pulse?", 1.0, 2.0, "v1"),
            seg("Great!", 2.0, 2.5, "v1"),
        ])
        .unwrap();
        assert_eq!(sentences.len(), 2);
        assert_eq!(sentences[0].text, "May I check your pulse?");
        assert_eq!(sentences[1].text, "Great!");
    }

    #[test]
    fn sources_group_in_first_appearance_order() {
        let sentences = merge_segments(&[
            seg("First bit", 0.0, 1.0, "a"),
            seg("Other clip.", 0.0, 1.0, "b"),
            seg("done.", 1.0, 2.0, "a"),
        ])
        .unwrap();
        assert_eq!(sentences.len(), 2);
        assert_eq!(sentences[0].id, "a_0001");
        assert_eq!(sentences[0].text, "First bit done.");
        assert_eq!(sentences[1].id, "b_0001");
    }

    #[test]
    fn out_of_order_segments_name_the_source() {
        let err = merge_segments(&[
            seg("one.", 0.0, 2.0, "v7"),
            seg("two.", 1.0, 3.0, "v7"),
        ])
        .unwrap_err();
        match err {
            CorpusError::SegmentOrdering {
                source_id, index, ..
            } => {
                assert_eq!(source_id, "v7");
                assert_eq!(index, 1);
            }
            other => panic!("expected ordering error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_segment_times_are_rejected() {
        for bad in [
            seg("x.", 2.0, 1.0, "v1"),
            seg("x.", -1.0, 1.0, "v1"),
            seg("x.", f64::NAN, 1.0, "v1"),
        ] {
            assert!(matches!(
                merge_segments(&[bad]),
                Err(CorpusError::InvalidSegment { .. })
            ));
        }
    }

    #[test]
    fn whitespace_only_segments_are_ignored() {
        let sentences = merge_segments(&[
            seg("Sit", 0.0, 1.0, "v1"),
            seg("   ", 1.0, 1.2, "v1"),
            seg("down.", 1.2, 2.0, "v1"),
        ])
        .unwrap();
        assert_eq!(sentences.len(), 1);
        assert_eq!(sentences[0].text, "Sit down.");
    }

    #[test]
    fn segments_parse_from_json_lines() {
        let text = r#"{"text":"Hi.","start":0.0,"end":1.0,"source_id":"v1"}

{"text":"Bye.","start":1.0,"end":2.0,"source_id":"v1"}
"#;
        let segments = parse_segments(text).unwrap();
        assert_eq!(segments.len(), 2);
        assert_eq!(segments[1].text, "Bye.");

        let err = parse_segments("{\"text\":1}").unwrap_err();
        assert!(matches!(err, CorpusError::Jsonl { line: 1, .. }));
    }

    #[test]
    fn clip_padding_floors_at_zero() {
        let sentences = merge_segments(&[
            seg("Early one.", 0.2, 2.0, "v1"),
            seg("Later one.", 10.0, 12.0, "v1"),
        ])
        .unwrap();
        let rows = clip_boundaries(&sentences, 0.5).unwrap();
        assert_eq!(rows.len(), sentences.len());
        assert_eq!((rows[0].start, rows[0].end), (0.0, 2.5));
        assert_eq!((rows[1].start, rows[1].end), (9.5, 12.5));
        assert!(matches!(
            clip_boundaries(&sentences, -0.1),
            Err(CorpusError::InvalidPadding { .. })
        ));
    }

    #[test]
    fn cut_list_is_csv_with_header() {
        let rows = vec![ClipRow {
            sentence_id: "v1_0001".into(),
            start: 9.5,
            end: 12.5,
        }];
        let csv = write_cut_list(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("sentence_id,start,end"));
        assert_eq!(lines.next(), Some("v1_0001,9.5,12.5"));
        assert_eq!(lines.next(), None);
    }

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

    fn fallback_backend(response: &str) -> MockBackend {
        MockBackend::new(MockFixture {
            mode: MockMode::Fallback,
            fallback_response: response.to_string(),
            ..MockFixture::default()
        })
    }

    #[test]
    fn one_record_per_sentence_backend_pair() {
        let sentences = [sentence("v1_0001", "Sit down."), sentence("v1_0002", "Hello.")];
        let a = fallback_backend("Classification: INSTRUCTION\nReasoning: directs");
        let b = fallback_backend("Classification: NEITHER\nReasoning: chat");
        let c = fallback_backend("Classification: NEITHER\nReasoning: chat");
        let backends: Vec<(&str, &dyn Backend)> = vec![("m1", &a), ("m2", &b), ("m3", &c)];
        let run = annotate_corpus(&sentences, &backends, &PromptTemplate::default_template(), 2)
            .unwrap();
        assert_eq!(run.records.len(), 6);
        assert!(run.failures.is_empty());
        // Sentence-major, backend order within a sentence.
        let order: Vec<(&str, &str)> = run
            .records
            .iter()
            .map(|r| (r.sentence_id.as_str(), r.annotator.as_str()))
            .collect();
        assert_eq!(
            order,
            vec![
                ("v1_0001", "m1"),
                ("v1_0001", "m2"),
                ("v1_0001", "m3"),
                ("v1_0002", "m1"),
                ("v1_0002", "m2"),
                ("v1_0002", "m3"),
            ]
        );
        assert_eq!(run.records[0].label, Label::Instruction);
        assert!(!run.records[0].anomaly);
    }

    #[test]
    fn unknown_twice_falls_back_to_neither_with_anomaly() {
        let sentences = [sentence("v1_0001", "Sit down.")];
        let odd = fallback_backend("Classification: MAYBE\nReasoning: unsure");
        let backends: Vec<(&str, &dyn Backend)> = vec![("m1", &odd)];
        let run = annotate_corpus(&sentences, &backends, &PromptTemplate::default_template(), 1)
            .unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.records[0].label, Label::Neither);
        assert!(run.records[0].anomaly);
    }

    #[test]
    fn transport_failures_are_collected_not_fatal() {
        let template = PromptTemplate::default_template();
        let sentences = [sentence("v1_0001", "Sit down."), sentence("v1_0002", "Hello.")];
        // Strict fixture knows only the first sentence's prompt.
        let mut known = MockBackend::new(MockFixture::default());
        let prompt = crate::gsd::build_prompt(&template, "Sit down.").unwrap();
        known.insert(&prompt, "Classification: INSTRUCTION\nReasoning: directs");
        let backends: Vec<(&str, &dyn Backend)> = vec![("m1", &known)];
        let run = annotate_corpus(&sentences, &backends, &template, 1).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.failures.len(), 1);
        assert_eq!(run.failures[0].sentence_id, "v1_0002");
        assert_eq!(run.failures[0].annotator, "m1");
    }

    #[test]
    fn annotation_runs_are_reproducible() {
        let sentences = [sentence("v1_0001", "Sit down."), sentence("v1_0002", "Hello.")];
        let a = fallback_backend("Classification: INSTRUCTION\nReasoning: directs");
        let b = fallback_backend("Classification: NEITHER\nReasoning: chat");
        let backends: Vec<(&str, &dyn Backend)> = vec![("m1", &a), ("m2", &b)];
        let template = PromptTemplate::default_template();
        let first = annotate_corpus(&sentences, &backends, &template, 3).unwrap();
        let second = annotate_corpus(&sentences, &backends, &template, 3).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn no_backends_is_an_error() {
        let sentences = [sentence("v1_0001", "Sit down.")];
        let backends: Vec<(&str, &dyn Backend)> = Vec::new();
        assert!(matches!(
            annotate_corpus(&sentences, &backends, &PromptTemplate::default_template(), 1),
            Err(CorpusError::NoBackends)
        ));
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

    #[test]
    fn unanimous_instruction_needs_human_review() {
        let records = [
            record("s1", "m1", Label::Instruction),
            record("s1", "m2", Label::Instruction),
            record("s1", "m3", Label::Instruction),
        ];
        let outcome = consensus(&records).unwrap();
        assert_eq!(outcome.outcome, Outcome::Unanimous(Label::Instruction));
        assert_eq!(outcome.final_label, Some(Label::Instruction));
        assert!(outcome.needs_review);
        assert!(outcome.resolved_by.is_none());
    }

    #[test]
    fn unanimous_neither_is_auto_final() {
        let records = [
            record("s1", "m1", Label::Neither),
            record("s1", "m2", Label::Neither),
        ];
        let outcome = consensus(&records).unwrap();
        assert_eq!(outcome.final_label, Some(Label::Neither));
        assert!(!outcome.needs_review);
    }

    #[test]
    fn mixed_votes_split_and_wait_for_human() {
        let records = [
            record("s1", "m1", Label::Consent),
            record("s1", "m2", Label::Consent),
            record("s1", "m3", Label::Neither),
        ];
        let outcome = consensus(&records).unwrap();
        let Outcome::Split(votes) = &outcome.outcome else {
            panic!("expected split");
        };
        assert_eq!(votes.get(&Label::Consent), Some(&2));
        assert_eq!(votes.get(&Label::Neither), Some(&1));
        assert_eq!(outcome.final_label, None);
        assert!(outcome.needs_review);
    }

    #[test]
    fn consensus_ignores_annotator_order() {
        let mut records = vec![
            record("s1", "m1", Label::Consent),
            record("s1", "m2", Label::Neither),
            record("s1", "m3", Label::Consent),
        ];
        let forward = consensus(&records).unwrap();
        records.reverse();
        let backward = consensus(&records).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn consensus_input_errors() {
        assert!(matches!(consensus(&[]), Err(CorpusError::EmptyGroup)));
        let mixed = [
            record("s1", "m1", Label::Neither),
            record("s2", "m2", Label::Neither),
        ];
        assert!(matches!(
            consensus(&mixed),
            Err(CorpusError::MixedGroup { .. })
        ));
        let unknown = [record("s1", "m1", Label::Unknown)];
        assert!(matches!(
            consensus(&unknown),
            Err(CorpusError::UnknownLabel { .. })
        ));
    }

    #[test]
    fn disagreement_counts_splits() {
        let mut outcomes = Vec::new();
        for i in 0..8 {
            let id = format!("s{i}");
            let label = if i < 2 { Label::Consent } else { Label::Neither };
            let records = if i < 2 {
                vec![record(&id, "m1", label), record(&id, "m2", Label::Neither)]
            } else {
                vec![record(&id, "m1", label), record(&id, "m2", label)]
            };
            outcomes.push(consensus(&records).unwrap());
        }
        assert_eq!(disagreement_rate(&outcomes).unwrap(), 0.25);

        let unanimous_only = &outcomes[2..];
        assert_eq!(disagreement_rate(unanimous_only).unwrap(), 0.0);
        assert!(matches!(
            disagreement_rate(&[]),
            Err(CorpusError::EmptyOutcomes)
        ));
    }

    fn fragment_to_segments(fragments: &[(Vec<String>, bool)]) -> Vec<AsrSegment> {
        fragments
            .iter()
            .enumerate()
            .map(|(i, (words, terminal))| {
                let mut text = words.join(" ");
                if *terminal {
                    text.push('.');
                }
                seg(&text, i as f64, i as f64 + 0.5, "v1")
            })
            .collect()
    }

    proptest! {
        // Merging never loses or reorders words, sentence spans tile the
        // input span, and the sentence count equals the number of
        // terminal fragments plus one unterminated tail.
        #[test]
        fn merge_preserves_words_and_spans(
            fragments in proptest::collection::vec(
                (proptest::collection::vec("[a-z]{1,6}", 1..4), proptest::bool::ANY),
                1..12,
            ),
        ) {
            let segments = fragment_to_segments(&fragments);
            let sentences = merge_segments(&segments).unwrap();

            let input_words: Vec<&str> = segments
                .iter()
                .flat_map(|s| s.text.split_whitespace())
                .collect();
            let output_words: Vec<&str> = sentences
                .iter()
                .flat_map(|s| s.text.split_whitespace())
                .collect();
            prop_assert_eq!(input_words, output_words);

            let terminals = fragments.iter().filter(|(_, t)| *t).count();
            let has_tail = fragments.last().is_some_and(|(_, t)| !*t);
            prop_assert_eq!(sentences.len(), terminals + usize::from(has_tail));

            // Spans: each sentence covers its fragments, sentences are in
            // time order, and ends never precede starts.
            prop_assert_eq!(sentences[0].start, segments[0].start);
            prop_assert_eq!(
                sentences.last().unwrap().end,
                segments.last().unwrap().end
            );
            for pair in sentences.windows(2) {
                prop_assert!(pair[0].end <= pair[1].start);
            }
            for s in &sentences {
                prop_assert!(s.start < s.end);
                prop_assert_eq!(s.fragment, !ends_sentence(&s.text));
            }
        }
    }
}
