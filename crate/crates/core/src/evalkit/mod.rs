//! Content-review metrics: edit-study measures, entailment-based citation
//! quality, and aggregation of human review labels.

mod citation;
mod edit;
mod review;

use std::path::{Path, PathBuf};

pub use citation::{citation_counts, citation_quality, CitationCounts, CitationQuality};
pub use edit::{
    bleu, edit_distance, edit_metrics, edit_study, levenshtein, rouge_l, token_churn, EditMetrics, EditPair,
    EditStudy, RougeL,
};
pub use review::{
    aggregate_review, load_labels_csv, parse_labels_csv, render_review_table, Distribution, ErrorCategory,
    Readability, ReadabilityMeans, ReviewLabel, ReviewReport, RubricLabel, StrategicLabel, TacticalLabel,
};

use crate::providers::ProviderError;
use crate::report::SituationReport;
use crate::summarize::DetailLevel;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("edit pairs line {line}: {detail}")]
    BadPair { line: usize, detail: String },
    #[error("labels line {line}: {detail}")]
    BadLabel { line: usize, detail: String },
    #[error("summary for {question} cites missing context [{index}]")]
    DanglingCitation { question: String, index: usize },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Parse edit pairs from JSONL (`generated`, `edited`, optional
/// `question_id`). Blank lines are skipped.
pub fn parse_edit_pairs(data: &str) -> Result<Vec<EditPair>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in data.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pair: EditPair =
            serde_json::from_str(line).map_err(|e| EvalError::BadPair { line: i + 1, detail: e.to_string() })?;
        if pair.generated.trim().is_empty() {
            return Err(EvalError::BadPair { line: i + 1, detail: "generated text is empty".into() });
        }
        out.push(pair);
    }
    Ok(out)
}

pub fn load_edit_pairs(path: &Path) -> Result<Vec<EditPair>, EvalError> {
    let data = std::fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.to_path_buf(), source })?;
    parse_edit_pairs(&data)
}

/// Citation quality pooled over every summary of a report, per level.
pub fn report_citation_quality(
    report: &SituationReport,
    judge: &dyn crate::providers::ModelProvider,
    entail_threshold: f64,
) -> Result<std::collections::BTreeMap<DetailLevel, CitationQuality>, EvalError> {
    let mut pooled: std::collections::BTreeMap<DetailLevel, CitationCounts> = Default::default();
    for section in report.sections() {
        for (level, summary) in &section.summaries {
            let counts = citation_counts(summary, &section.contexts, judge, entail_threshold)?;
            pooled.entry(*level).or_default().add(&counts);
        }
    }
    Ok(pooled.into_iter().map(|(level, c)| (level, c.quality())).collect())
}
