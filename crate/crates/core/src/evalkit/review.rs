use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    NoRelevantContexts,
    Inaccurate,
    Incoherent,
    Incomplete,
    Irrelevant,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategicLabel {
    NotStrategic,
    SomeValue,
    DefinitelyStrategic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TacticalLabel {
    NoneTactical,
    SomeTactical,
    MostTactical,
}

/// Coherence, relevance and usefulness, each on a 1 to 5 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Readability {
    pub coherence: u8,
    pub relevance: u8,
    pub usefulness: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricLabel {
    pub strategic: Option<StrategicLabel>,
    pub tactical: Option<TacticalLabel>,
    pub readability: Option<Readability>,
}

/// One annotated item; any part may be missing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewLabel {
    pub item_id: String,
    pub error_category: Option<ErrorCategory>,
    pub rubric: RubricLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityMeans {
    pub coherence: f64,
    pub relevance: f64,
    pub usefulness: f64,
    pub n: usize,
}

/// Distribution over one label dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution<K: Ord> {
    pub n: usize,
    pub counts: BTreeMap<K, usize>,
    pub fractions: BTreeMap<K, f64>,
}

impl<K: Ord + Copy> Distribution<K> {
    fn from_labels(labels: impl Iterator<Item = K>) -> Self {
        let mut counts = BTreeMap::new();
        for k in labels {
            *counts.entry(k).or_default() += 1;
        }
        let n: usize = counts.values().sum();
        let fractions = counts.iter().map(|(&k, &c)| (k, c as f64 / n as f64)).collect();
        Distribution { n, counts, fractions }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewReport {
    pub items: usize,
    pub error_categories: Distribution<ErrorCategory>,
    pub strategic: Distribution<StrategicLabel>,
    pub tactical: Distribution<TacticalLabel>,
    pub readability: Option<ReadabilityMeans>,
}

pub fn aggregate_review(labels: &[ReviewLabel]) -> ReviewReport {
    let readable: Vec<Readability> = labels.iter().filter_map(|l| l.rubric.readability).collect();
    let mean = |f: fn(&Readability) -> u8| readable.iter().map(|r| f64::from(f(r))).sum::<f64>() / readable.len() as f64;
    ReviewReport {
        items: labels.len(),
        error_categories: Distribution::from_labels(labels.iter().filter_map(|l| l.error_category)),
        strategic: Distribution::from_labels(labels.iter().filter_map(|l| l.rubric.strategic)),
        tactical: Distribution::from_labels(labels.iter().filter_map(|l| l.rubric.tactical)),
        readability: (!readable.is_empty()).then(|| ReadabilityMeans {
            coherence: mean(|r| r.coherence),
            relevance: mean(|r| r.relevance),
            usefulness: mean(|r| r.usefulness),
            n: readable.len(),
        }),
    }
}

fn label_name<K: Serialize>(k: &K) -> String {
    serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn table_rows<K: Ord + Serialize>(out: &mut String, title: &str, d: &Distribution<K>) {
    let _ = writeln!(out, "{title} (n={})", d.n);
    for (k, c) in &d.counts {
        let _ = writeln!(out, "  {:<22} {:>5} {:>7.1}%", label_name(k), c, 100.0 * d.fractions[k]);
    }
}

/// Plain-text rendering of a review report.
pub fn render_review_table(report: &ReviewReport) -> String {
    let mut out = format!("items: {}\n", report.items);
    table_rows(&mut out, "error categories", &report.error_categories);
    table_rows(&mut out, "strategic", &report.strategic);
    table_rows(&mut out, "tactical", &report.tactical);
    match &report.readability {
        Some(r) => {
            let _ = writeln!(out, "readability (n={})", r.n);
            let _ = writeln!(out, "  coherence  {:.2}\n  relevance  {:.2}\n  usefulness {:.2}", r.coherence, r.relevance, r.usefulness);
        }
        None => out.push_str("readability (n=0)\n"),
    }
    out
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    item_id: String,
    #[serde(default)]
    error_category: Option<String>,
    #[serde(default)]
    strategic: Option<String>,
    #[serde(default)]
    tactical: Option<String>,
    #[serde(default)]
    coherence: Option<String>,
    #[serde(default)]
    relevance: Option<String>,
    #[serde(default)]
    usefulness: Option<String>,
}

fn present(v: &Option<String>) -> Option<&str> {
    v.as_deref().map(str::trim).filter(|s| !s.is_empty())
}

fn parse_enum<T: for<'de> Deserialize<'de>>(value: Option<&str>, line: usize, column: &str) -> Result<Option<T>, EvalError> {
    value
        .map(|v| {
            serde_json::from_value(serde_json::Value::String(v.to_string()))
                .map_err(|_| EvalError::BadLabel { line, detail: format!("{column}: unknown value {v:?}") })
        })
        .transpose()
}

fn parse_score(value: &str, line: usize, column: &str) -> Result<u8, EvalError> {
    match value.parse::<u8>() {
        Ok(v @ 1..=5) => Ok(v),
        _ => Err(EvalError::BadLabel { line, detail: format!("{column}: {value:?} is not an integer in 1..5") }),
    }
}

/// Parse a labels CSV with header
/// `item_id,error_category,strategic,tactical,coherence,relevance,usefulness`.
/// Blank cells mean "not labelled"; readability needs all three scores.
pub fn parse_labels_csv(data: &str) -> Result<Vec<ReviewLabel>, EvalError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(data.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<LabelRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| EvalError::BadLabel { line, detail: e.to_string() })?;
        let scores = [present(&row.coherence), present(&row.relevance), present(&row.usefulness)];
        let readability = match scores {
            [Some(c), Some(r), Some(u)] => Some(Readability {
                coherence: parse_score(c, line, "coherence")?,
                relevance: parse_score(r, line, "relevance")?,
                usefulness: parse_score(u, line, "usefulness")?,
            }),
            [None, None, None] => None,
            _ => return Err(EvalError::BadLabel { line, detail: "readability needs all three scores or none".into() }),
        };
        out.push(ReviewLabel {
            item_id: row.item_id,
            error_category: parse_enum(present(&row.error_category), line, "error_category")?,
            rubric: RubricLabel {
                strategic: parse_enum(present(&row.strategic), line, "strategic")?,
                tactical: parse_enum(present(&row.tactical), line, "tactical")?,
                readability,
            },
        });
    }
    Ok(out)
}

pub fn load_labels_csv(path: &Path) -> Result<Vec<ReviewLabel>, EvalError> {
    let data = std::fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.to_path_buf(), source })?;
    parse_labels_csv(&data)
}
