//! Prompt template: header, labeled exemplars, and the output format
//! block the model must imitate.
//!
//! File format, by example:
//!
//! ```text
//! [header]
//! free text...
//!
//! [exemplar source=dataset]
//! sentence: Please raise your arm.
//! label: INSTRUCTION
//! reasoning: Directs a physical movement.
//!
//! [output]
//! Sentence: "{sentence}"
//! Classification: [INSTRUCTION/CONSENT/NEITHER]
//! Reasoning: [Brief explanation]
//! ```
//!
//! Lines whose first non-blank character is `#` are comments. The
//! `[output]` block doubles as the render template: `{sentence}` is
//! substituted, the bracketed category list is replaced by the
//! exemplar's label, and the bracketed explanation slot by its
//! reasoning; the query block is the same format cut off right after
//! `Classification:` for the model to complete.

use super::{GsdError, Label};

const DEFAULT_TEMPLATE_TEXT: &str = include_str!("../../../../configs/gsd_template.txt");

/// Where an exemplar came from: transcribed-corpus style or handcrafted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExemplarSource {
    Dataset,
    Manual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub sentence: String,
    pub label: Label,
    pub reasoning: String,
    pub source: ExemplarSource,
}

/// Expected exemplar composition; the default matches the shipped
/// 11-shot template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExemplarPolicy {
    pub instruction: usize,
    pub consent: usize,
    pub neither: usize,
    pub dataset: usize,
    pub manual: usize,
}

impl Default for ExemplarPolicy {
    fn default() -> Self {
        Self {
            instruction: 4,
            consent: 4,
            neither: 3,
            dataset: 6,
            manual: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub instruction_header: String,
    pub exemplars: Vec<Exemplar>,
    pub output_format: String,
}

enum Section {
    None,
    Header(Vec<String>),
    Exemplar {
        line: usize,
        source: ExemplarSource,
        sentence: Option<String>,
        label: Option<Label>,
        reasoning: Option<String>,
    },
    Output(Vec<String>),
}

impl PromptTemplate {
    /// The embedded default 11-shot template.
    pub fn default_template() -> Self {
        let template =
            Self::parse(DEFAULT_TEMPLATE_TEXT).expect("embedded default template is valid");
        template
            .validate(&ExemplarPolicy::default())
            .expect("embedded default template satisfies the default policy");
        template
    }

    pub fn parse(text: &str) -> Result<Self, GsdError> {
        let mut header: Option<String> = None;
        let mut output: Option<String> = None;
        let mut exemplars: Vec<Exemplar> = Vec::new();
        let mut section = Section::None;

        let mut close =
            |section: &mut Section, at_line: usize| -> Result<(), GsdError> {
                match std::mem::replace(section, Section::None) {
                    Section::None => Ok(()),
                    Section::Header(lines) => {
                        if header.is_some() {
                            return Err(GsdError::TemplateParse {
                                line: at_line,
                                reason: "duplicate [header] section".into(),
                            });
                        }
                        header = Some(join_block(lines));
                        Ok(())
                    }
                    Section::Output(lines) => {
                        if output.is_some() {
                            return Err(GsdError::TemplateParse {
                                line: at_line,
                                reason: "duplicate [output] section".into(),
                            });
                        }
                        output = Some(join_block(lines));
                        Ok(())
                    }
                    Section::Exemplar {
                        line,
                        source,
                        sentence,
                        label,
                        reasoning,
                    } => {
                        let missing = |what: &str| GsdError::TemplateParse {
                            line,
                            reason: format!("exemplar is missing `{what}:`"),
                        };
                        exemplars.push(Exemplar {
                            sentence: sentence.ok_or_else(|| missing("sentence"))?,
                            label: label.ok_or_else(|| missing("label"))?,
                            reasoning: reasoning.ok_or_else(|| missing("reasoning"))?,
                            source,
                        });
                        Ok(())
                    }
                }
            };

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = raw.trim();
            if trimmed.starts_with('#') {
                continue;
            }
            let fail = |reason: String| GsdError::TemplateParse {
                line: line_no,
                reason,
            };

            if trimmed == "[header]" {
                close(&mut section, line_no)?;
                section = Section::Header(Vec::new());
            } else if trimmed == "[output]" {
                close(&mut section, line_no)?;
                section = Section::Output(Vec::new());
            } else if let Some(attrs) = trimmed
                .strip_prefix("[exemplar")
                .and_then(|s| s.strip_suffix(']'))
            {
                close(&mut section, line_no)?;
                let source = match attrs.trim() {
                    "source=dataset" => ExemplarSource::Dataset,
                    "source=manual" => ExemplarSource::Manual,
                    other => {
                        return Err(fail(format!(
                            "exemplar needs `source=dataset` or `source=manual`, got `{other}`"
                        )))
                    }
                };
                section = Section::Exemplar {
                    line: line_no,
                    source,
                    sentence: None,
                    label: None,
                    reasoning: None,
                };
            } else if trimmed.starts_with('[') {
                return Err(fail(format!("unknown section `{trimmed}`")));
            } else {
                match &mut section {
                    Section::None => {
                        if !trimmed.is_empty() {
                            return Err(fail("text outside any section".into()));
                        }
                    }
                    Section::Header(lines) | Section::Output(lines) => {
                        lines.push(raw.to_string());
                    }
                    Section::Exemplar {
                        sentence,
                        label,
                        reasoning,
                        ..
                    } => {
                        if trimmed.is_empty() {
                            continue;
                        }
                        if let Some(v) = trimmed.strip_prefix("sentence:") {
                            *sentence = Some(v.trim().to_string());
                        } else if let Some(v) = trimmed.strip_prefix("label:") {
                            let token = v.trim();
                            let parsed = Label::from_token(token)
                                .filter(|l| *l != Label::Unknown)
                                .ok_or_else(|| {
                                    fail(format!("`{token}` is not a valid exemplar label"))
                                })?;
                            *label = Some(parsed);
                        } else if let Some(v) = trimmed.strip_prefix("reasoning:") {
                            *reasoning = Some(v.trim().to_string());
                        } else {
                            return Err(fail(format!("unexpected exemplar line `{trimmed}`")));
                        }
                    }
                }
            }
        }
        let last_line = text.lines().count();
        close(&mut section, last_line)?;

        let template = Self {
            instruction_header: header.ok_or(GsdError::TemplateInvalid {
                reason: "missing [header] section".into(),
            })?,
            exemplars,
            output_format: output.ok_or(GsdError::TemplateInvalid {
                reason: "missing [output] section".into(),
            })?,
        };
        template.validate_output_format()?;
        Ok(template)
    }

    fn validate_output_format(&self) -> Result<(), GsdError> {
        let invalid = |reason: String| GsdError::TemplateInvalid { reason };
        for token in ["INSTRUCTION", "CONSENT", "NEITHER", "{sentence}", "Classification:"] {
            if !self.output_format.contains(token) {
                return Err(invalid(format!("output format lacks `{token}`")));
            }
        }
        Ok(())
    }

    /// Check exemplar composition against a policy.
    pub fn validate(&self, policy: &ExemplarPolicy) -> Result<(), GsdError> {
        let count = |l: Label| self.exemplars.iter().filter(|e| e.label == l).count();
        let by_source = |s: ExemplarSource| {
            self.exemplars.iter().filter(|e| e.source == s).count()
        };
        let checks = [
            ("INSTRUCTION", count(Label::Instruction), policy.instruction),
            ("CONSENT", count(Label::Consent), policy.consent),
            ("NEITHER", count(Label::Neither), policy.neither),
            ("dataset-sourced", by_source(ExemplarSource::Dataset), policy.dataset),
            ("manual-sourced", by_source(ExemplarSource::Manual), policy.manual),
        ];
        for (what, actual, expected) in checks {
            if actual != expected {
                return Err(GsdError::TemplateInvalid {
                    reason: format!("expected {expected} {what} exemplars, found {actual}"),
                });
            }
        }
        Ok(())
    }

    /// Render one exemplar in the output format.
    pub fn render_exemplar(&self, exemplar: &Exemplar) -> String {
        self.output_format
            .replace("{sentence}", &exemplar.sentence)
            .replace("[INSTRUCTION/CONSENT/NEITHER]", exemplar.label.token())
            .replace("[Brief explanation]", &exemplar.reasoning)
    }

    /// Render the query block: the output format cut off right after
    /// `Classification:`, leaving the slot for the model to fill.
    pub fn render_query(&self, sentence: &str) -> String {
        let filled = self.output_format.replace("{sentence}", sentence);
        match filled.find("Classification:") {
            Some(pos) => filled[..pos + "Classification:".len()].to_string(),
            None => filled,
        }
    }
}

/// Join block lines, dropping blank padding lines at both ends while
/// keeping interior blank lines and indentation.
fn join_block(mut lines: Vec<String>) -> String {
    while lines.first().is_some_and(|l| l.trim().is_empty()) {
        lines.remove(0);
    }
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}
