//! Sentence-level speech act detection: few-shot prompt construction,
//! model response parsing, and the gesture trigger decision.
//!
//! A sentence is classified as CONSENT (seeks permission), INSTRUCTION
//! (directs a physical action), or NEITHER. UNKNOWN is assigned, never
//! ground truth: it marks model output that named no recognizable
//! category. Prompts have a fixed shape: instruction header, labeled
//! exemplars, then the query sentence cut off right after
//! `Classification:` for the model to complete.

mod template;

pub use template::{Exemplar, ExemplarPolicy, ExemplarSource, PromptTemplate};

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::llm::{Backend, BackendError};

/// Speech act category.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Consent,
    Instruction,
    Neither,
    Unknown,
}

impl Label {
    /// The three ground-truth categories, in canonical order. `Unknown`
    /// is excluded: it can be predicted but never annotated.
    pub const TRUE_LABELS: [Label; 3] = [Label::Consent, Label::Instruction, Label::Neither];

    pub fn token(self) -> &'static str {
        match self {
            Label::Consent => "CONSENT",
            Label::Instruction => "INSTRUCTION",
            Label::Neither => "NEITHER",
            Label::Unknown => "UNKNOWN",
        }
    }

    /// Case-insensitive exact-token lookup.
    pub fn from_token(token: &str) -> Option<Label> {
        let t = token.trim();
        [Label::Consent, Label::Instruction, Label::Neither, Label::Unknown]
            .into_iter()
            .find(|label| t.eq_ignore_ascii_case(label.token()))
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GsdError {
    #[error("sentence is empty")]
    EmptySentence,
    #[error("template parse error at line {line}: {reason}")]
    TemplateParse { line: usize, reason: String },
    #[error("template invalid: {reason}")]
    TemplateInvalid { reason: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// One classified sentence, with the untouched model output kept for
/// audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub sentence_id: String,
    pub label: Label,
    pub reasoning: String,
    pub raw_response: String,
    pub latency: Duration,
}

/// Assemble the full prompt: header, every exemplar, then the query
/// block, separated by blank lines. The sentence is trimmed; an empty
/// one is refused rather than sent.
pub fn build_prompt(template: &PromptTemplate, sentence: &str) -> Result<String, GsdError> {
    let sentence = sentence.trim();
    if sentence.is_empty() {
        return Err(GsdError::EmptySentence);
    }
    let mut parts = Vec::with_capacity(template.exemplars.len() + 2);
    parts.push(template.instruction_header.clone());
    for exemplar in &template.exemplars {
        parts.push(template.render_exemplar(exemplar));
    }
    parts.push(template.render_query(sentence));
    Ok(parts.join("\n\n"))
}

/// Extract the category and reasoning from raw model output.
///
/// `<think>`/`<thinking>` blocks are removed first; an unclosed one
/// swallows the rest of the text. The first remaining line containing
/// `Classification` plus optional markdown decoration and a colon
/// supplies the label token (trimmed of punctuation); the first
/// `Reasoning:` field at or after that line supplies the reasoning,
/// with one pair of surrounding brackets stripped. Output that names no
/// recognizable category maps to `Label::Unknown`, never an error.
pub fn parse_response(raw: &str) -> (Label, String) {
    let cleaned = strip_think_blocks(raw);
    let lines: Vec<&str> = cleaned.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        let Some(value) = field_after_keyword(line, "classification") else {
            continue;
        };
        let token = value
            .split_whitespace()
            .next()
            .unwrap_or("")
            .trim_matches(|c: char| !c.is_ascii_alphabetic());
        let label = Label::from_token(token).unwrap_or(Label::Unknown);
        let reasoning = lines[i..]
            .iter()
            .find_map(|l| field_after_keyword(l, "reasoning"))
            .map(strip_brackets)
            .unwrap_or_default();
        return (label, reasoning);
    }
    (Label::Unknown, String::new())
}

/// Whether a category should trigger gesture generation: permission
/// seeking and physical instructions do, everything else does not.
pub fn gesture_trigger(label: Label) -> bool {
    matches!(label, Label::Consent | Label::Instruction)
}

/// Classify one sentence through a backend, timing the completion call.
/// Transport errors surface; unparseable output does not (it becomes
/// `Label::Unknown`).
pub fn classify<B: Backend + ?Sized>(
    backend: &B,
    template: &PromptTemplate,
    sentence_id: &str,
    sentence: &str,
) -> Result<ClassificationResult, GsdError> {
    let prompt = build_prompt(template, sentence)?;
    let started = Instant::now();
    let raw_response = backend.complete(&prompt)?;
    let latency = started.elapsed();
    let (label, reasoning) = parse_response(&raw_response);
    Ok(ClassificationResult {
        sentence_id: sentence_id.to_string(),
        label,
        reasoning,
        raw_response,
        latency,
    })
}

/// ASCII-case-insensitive substring search from a byte offset. The
/// needle must be ASCII; a match therefore covers only ASCII bytes and
/// both endpoints are char boundaries.
fn find_ci(haystack: &str, needle: &str, from: usize) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.is_empty() || from >= h.len() {
        return None;
    }
    h[from..]
        .windows(n.len())
        .position(|w| w.eq_ignore_ascii_case(n))
        .map(|i| from + i)
}

/// Remove `<think>...</think>` and `<thinking>...</thinking>` spans,
/// case-insensitively. An opening tag without its close removes
/// everything after it.
fn strip_think_blocks(text: &str) -> String {
    const TAGS: [(&str, &str); 2] = [("<thinking>", "</thinking>"), ("<think>", "</think>")];
    let mut out = String::new();
    let mut pos = 0;
    loop {
        let mut next: Option<(usize, usize, &str)> = None;
        for (open, close) in TAGS {
            if let Some(i) = find_ci(text, open, pos) {
                if next.is_none_or(|(j, _, _)| i < j) {
                    next = Some((i, open.len(), close));
                }
            }
        }
        let Some((open_idx, open_len, close_tag)) = next else {
            out.push_str(&text[pos..]);
            return out;
        };
        out.push_str(&text[pos..open_idx]);
        match find_ci(text, close_tag, open_idx + open_len) {
            Some(close_idx) => pos = close_idx + close_tag.len(),
            None => return out,
        }
    }
}

/// Markdown decoration allowed around a field keyword and its colon.
const DECOR: &[char] = &['*', '`', ' ', '\t'];

/// Find `keyword` followed by optional decoration and a colon; return
/// the trimmed text after the colon.
fn field_after_keyword<'a>(line: &'a str, keyword: &str) -> Option<&'a str> {
    let mut from = 0;
    while let Some(idx) = find_ci(line, keyword, from) {
        let after = &line[idx + keyword.len()..];
        if let Some(rest) = after.trim_start_matches(DECOR).strip_prefix(':') {
            return Some(rest.trim_start_matches(DECOR).trim());
        }
        from = idx + keyword.len();
    }
    None
}

/// Trim whitespace and one pair of surrounding square brackets.
fn strip_brackets(value: &str) -> String {
    let v = value.trim();
    v.strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .unwrap_or(v)
        .trim()
        .to_string()
}
