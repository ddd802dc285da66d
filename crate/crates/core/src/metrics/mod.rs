//! Classification evaluation: confusion matrices with a predicted-only
//! UNKNOWN column, support-weighted metrics, and full-dataset model
//! evaluation.
//!
//! UNKNOWN marks model output that named no real category. It appears
//! only as a predicted column: such predictions lower accuracy and
//! recall, but precision is computed for the three real classes alone.
//! "Weighted" always means weighted by true-class support.

use serde::Serialize;

use crate::corpus::DatasetRecord;
use crate::gsd::{classify, Label, PromptTemplate};
use crate::llm::{parallel_map, Backend};

/// Ground-truth classes, row order of the matrix.
pub const TRUE_CLASSES: [Label; 3] = Label::TRUE_LABELS;
/// Predicted classes, column order of the matrix.
pub const PRED_CLASSES: [Label; 4] = [
    Label::Consent,
    Label::Instruction,
    Label::Neither,
    Label::Unknown,
];

/// Fraction of transport failures above which an evaluation is flagged
/// invalid.
pub const FAILURE_THRESHOLD: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("got {truths} truths but {preds} predictions")]
    LengthMismatch { truths: usize, preds: usize },
    #[error("truth {index} is UNKNOWN, which is never a ground-truth category")]
    UnknownTruth { index: usize },
    #[error("metrics are undefined on an empty matrix")]
    EmptyMatrix,
    #[error("evaluation needs a non-empty dataset")]
    EmptyDataset,
    #[error("{count} dataset rows lack a final label")]
    UnfinalizedDataset { count: usize },
    #[error("every one of the {failures} classification attempts failed")]
    AllFailed { failures: usize },
}

/// 3 true-label rows by 4 predicted columns of pair counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 4]; 3],
}

fn true_index(label: Label) -> Option<usize> {
    TRUE_CLASSES.iter().position(|l| *l == label)
}

fn pred_index(label: Label) -> usize {
    true_index(label).unwrap_or(3)
}

impl ConfusionMatrix {
    pub fn zero() -> Self {
        Self {
            counts: [[0; 4]; 3],
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Diagonal mass over the 3 true-class columns.
    pub fn trace(&self) -> usize {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    /// Per-class support (number of samples truly in class `row`).
    pub fn row_sum(&self, row: usize) -> usize {
        self.counts[row].iter().sum()
    }

    /// Number of samples predicted as class `col`.
    pub fn col_sum(&self, col: usize) -> usize {
        self.counts.iter().map(|row| row[col]).sum()
    }

    /// Render as CSV with labeled rows and columns.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["true_label".to_string()];
        header.extend(PRED_CLASSES.iter().map(|l| l.token().to_string()));
        w.write_record(&header).expect("in-memory csv write cannot fail");
        for (i, label) in TRUE_CLASSES.iter().enumerate() {
            let mut row = vec![label.token().to_string()];
            row.extend(self.counts[i].iter().map(|c| c.to_string()));
            w.write_record(&row).expect("in-memory csv write cannot fail");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush cannot fail"))
            .expect("csv output is utf-8")
    }
}

/// Count (truth, prediction) pairs. Truths must come from the three
/// real classes; predictions may also be UNKNOWN.
pub fn confusion(truths: &[Label], preds: &[Label]) -> Result<ConfusionMatrix, MetricsError> {
    if truths.len() != preds.len() {
        return Err(MetricsError::LengthMismatch {
            truths: truths.len(),
            preds: preds.len(),
        });
    }
    let mut matrix = ConfusionMatrix::zero();
    for (index, (truth, pred)) in truths.iter().zip(preds).enumerate() {
        let row = true_index(*truth).ok_or(MetricsError::UnknownTruth { index })?;
        matrix.counts[row][pred_index(*pred)] += 1;
    }
    Ok(matrix)
}

/// Metrics for one true class. When a denominator is empty the figure
/// is 0 and the matching `*_undefined` flag is set, never an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub per_class: [ClassMetrics; 3],
    pub total: usize,
}

/// Reduce a matrix to accuracy, per-class figures, and support-weighted
/// averages. Accuracy is diagonal mass over the full total, so UNKNOWN
/// predictions depress it; UNKNOWN is never a scored class.
pub fn metrics(matrix: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    let total = matrix.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let per_class: [ClassMetrics; 3] = std::array::from_fn(|c| {
        let support = matrix.row_sum(c);
        let predicted = matrix.col_sum(c);
        let diag = matrix.counts[c][c] as f64;
        let precision_undefined = predicted == 0;
        let recall_undefined = support == 0;
        let precision = if precision_undefined {
            0.0
        } else {
            diag / predicted as f64
        };
        let recall = if recall_undefined {
            0.0
        } else {
            diag / support as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            label: TRUE_CLASSES[c],
            precision,
            recall,
            f1,
            support,
            precision_undefined,
            recall_undefined,
        }
    });
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class
            .iter()
            .map(|m| m.support as f64 * f(m))
            .sum::<f64>()
            / total as f64
    };
    Ok(MetricsReport {
        accuracy: matrix.trace() as f64 / total as f64,
        weighted_precision: weighted(|m| m.precision),
        weighted_recall: weighted(|m| m.recall),
        weighted_f1: weighted(|m| m.f1),
        per_class,
        total,
    })
}

/// One evaluated sentence. Exactly one of `prediction` and `error` is
/// set; failed sentences are excluded from the matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalEntry {
    pub sentence_id: String,
    pub truth: Label,
    pub prediction: Option<Label>,
    pub reasoning: String,
    pub error: Option<String>,
}

/// A full evaluation run. `valid` is false when transport failures
/// exceeded [`FAILURE_THRESHOLD`]; matrix and report then cover only
/// the classified subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub matrix: ConfusionMatrix,
    pub report: MetricsReport,
    pub log: Vec<EvalEntry>,
    pub failures: usize,
    pub valid: bool,
}

/// Classify every dataset sentence and score the predictions against
/// the final labels. Deterministic for a given backend: the log keeps
/// dataset order and carries no timing data.
pub fn eval_model(
    dataset: &[DatasetRecord],
    backend: &dyn Backend,
    template: &PromptTemplate,
    concurrency: usize,
) -> Result<Evaluation, MetricsError> {
    if dataset.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    let unfinalized = dataset
        .iter()
        .filter(|r| r.outcome.final_label.is_none())
        .count();
    if unfinalized > 0 {
        return Err(MetricsError::UnfinalizedDataset { count: unfinalized });
    }

    let results = parallel_map(dataset, concurrency, |_, record| {
        classify(backend, template, &record.sentence.id, &record.sentence.text)
    });

    let mut log = Vec::with_capacity(dataset.len());
    let mut truths = Vec::new();
    let mut preds = Vec::new();
    let mut failures = 0usize;
    for (record, result) in dataset.iter().zip(results) {
        let truth = record
            .outcome
            .final_label
            .expect("finalization checked above");
        match result {
            Ok(r) => {
                truths.push(truth);
                preds.push(r.label);
                log.push(EvalEntry {
                    sentence_id: record.sentence.id.clone(),
                    truth,
                    prediction: Some(r.label),
                    reasoning: r.reasoning,
                    error: None,
                });
            }
            Err(e) => {
                failures += 1;
                log.push(EvalEntry {
                    sentence_id: record.sentence.id.clone(),
                    truth,
                    prediction: None,
                    reasoning: String::new(),
                    error: Some(e.to_string()),
                });
            }
        }
    }
    if truths.is_empty() {
        return Err(MetricsError::AllFailed { failures });
    }
    let matrix = confusion(&truths, &preds).expect("per-row labels are valid by construction");
    let report = metrics(&matrix)?;
    let valid = (failures as f64) <= FAILURE_THRESHOLD * dataset.len() as f64;
    Ok(Evaluation {
        matrix,
        report,
        log,
        failures,
        valid,
    })
}

/// Render the matrix as an aligned text table.
pub fn render_matrix(matrix: &ConfusionMatrix) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<12}", "true\\pred"));
    for label in PRED_CLASSES {
        out.push_str(&format!("{:>13}", label.token()));
    }
    out.push('\n');
    for (i, label) in TRUE_CLASSES.iter().enumerate() {
        out.push_str(&format!("{:<12}", label.token()));
        for count in matrix.counts[i] {
            out.push_str(&format!("{count:>13}"));
        }
        out.push('\n');
    }
    out
}

/// Render a report as an aligned text table.
pub fn render_report(report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("samples             {:>9}\n", report.total));
    out.push_str(&format!("accuracy            {:>9.4}\n", report.accuracy));
    out.push_str(&format!(
        "weighted precision  {:>9.4}\n",
        report.weighted_precision
    ));
    out.push_str(&format!(
        "weighted recall     {:>9.4}\n",
        report.weighted_recall
    ));
    out.push_str(&format!("weighted f1         {:>9.4}\n\n", report.weighted_f1));
    out.push_str(&format!(
        "{:<12}{:>10}{:>10}{:>10}{:>9}\n",
        "class", "precision", "recall", "f1", "support"
    ));
    for m in &report.per_class {
        out.push_str(&format!(
            "{:<12}{:>10.4}{:>10.4}{:>10.4}{:>9}\n",
            m.label.token(),
            m.precision,
            m.recall,
            m.f1,
            m.support
        ));
    }
    out
}
