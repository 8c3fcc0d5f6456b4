//! Corpus ingestion, timespan partitioning and source bias metadata.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::text::normalize_whitespace;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line_no}: malformed record: {detail}")]
    MalformedRecord { path: PathBuf, line_no: usize, detail: String },
    #[error("duplicate article id {0:?}")]
    DuplicateId(String),
    #[error("article {id:?}: unparseable date {value:?}")]
    UnparseableDate { id: String, value: String },
    #[error("article {id:?}: date {date} outside corpus range {start}..={end}")]
    OutOfRange { id: String, date: NaiveDate, start: NaiveDate, end: NaiveDate },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("weeks must be at least 1")]
    InvalidWeeks,
    #[error("{path}: line {line_no}: {detail}")]
    BadBiasRow { path: PathBuf, line_no: usize, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArticleKind {
    Snippet,
    FullArticle,
}

/// A dated source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsArticle {
    pub id: String,
    #[serde(rename = "source")]
    pub source_name: String,
    pub url: String,
    #[serde(rename = "date", with = "iso_date")]
    pub published_at: NaiveDate,
    pub title: String,
    pub body: String,
    pub kind: ArticleKind,
}

pub(crate) mod iso_date {
    use chrono::NaiveDate;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(date: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&date.format(super::DATE_FORMAT))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
        let raw = String::deserialize(d)?;
        NaiveDate::parse_from_str(&raw, super::DATE_FORMAT).map_err(serde::de::Error::custom)
    }
}

/// Wire shape of one corpus line, before date validation.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    source: String,
    url: String,
    date: String,
    title: String,
    body: String,
    kind: ArticleKind,
}

pub fn parse_date(value: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(value.trim(), DATE_FORMAT).ok()
}

fn parse_records(path: &Path, content: &str) -> Result<Vec<NewsArticle>, CorpusError> {
    let mut out = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |detail: String| CorpusError::MalformedRecord {
            path: path.to_path_buf(),
            line_no,
            detail,
        };
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let id = raw.id.trim().to_string();
        if id.is_empty() {
            return Err(malformed("empty id".to_string()));
        }
        let body = normalize_whitespace(&raw.body);
        if body.is_empty() {
            return Err(malformed(format!("article {id:?} has an empty body")));
        }
        let published_at = parse_date(&raw.date)
            .ok_or_else(|| CorpusError::UnparseableDate { id: id.clone(), value: raw.date.clone() })?;
        out.push(NewsArticle {
            id,
            source_name: normalize_whitespace(&raw.source),
            url: raw.url.trim().to_string(),
            published_at,
            title: normalize_whitespace(&raw.title),
            body,
            kind: raw.kind,
        });
    }
    Ok(out)
}

fn sort_and_check(mut articles: Vec<NewsArticle>) -> Result<Vec<NewsArticle>, CorpusError> {
    let mut seen = BTreeSet::new();
    for a in &articles {
        if !seen.insert(a.id.as_str()) {
            return Err(CorpusError::DuplicateId(a.id.clone()));
        }
    }
    articles.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.id.cmp(&b.id)));
    Ok(articles)
}

/// Read one JSONL corpus file. Articles come back sorted by date then id,
/// with whitespace normalized.
pub fn ingest_corpus(path: &Path) -> Result<Vec<NewsArticle>, CorpusError> {
    ingest_paths(&[path.to_path_buf()])
}

/// Read and merge several JSONL files; ids must be unique across all of them.
pub fn ingest_paths(paths: &[PathBuf]) -> Result<Vec<NewsArticle>, CorpusError> {
    let mut all = Vec::new();
    for path in paths {
        let content = std::fs::read_to_string(path)
            .map_err(|source| CorpusError::Io { path: path.clone(), source })?;
        all.extend(parse_records(path, &content)?);
    }
    sort_and_check(all)
}

/// Serialize articles as JSONL in the ingestion schema.
pub fn to_jsonl(articles: &[NewsArticle]) -> String {
    let mut out = String::new();
    for a in articles {
        out.push_str(&serde_json::to_string(a).expect("article serializes"));
        out.push('\n');
    }
    out
}

/// Reject articles dated outside `[start, end]`.
pub fn check_range(articles: &[NewsArticle], start: NaiveDate, end: NaiveDate) -> Result<(), CorpusError> {
    match articles.iter().find(|a| a.published_at < start || a.published_at > end) {
        Some(a) => Err(CorpusError::OutOfRange { id: a.id.clone(), date: a.published_at, start, end }),
        None => Ok(()),
    }
}

/// An N-week window; `end_date` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timespan {
    pub index: usize,
    #[serde(with = "iso_date")]
    pub start_date: NaiveDate,
    #[serde(with = "iso_date")]
    pub end_date: NaiveDate,
    pub weeks: u32,
}

impl Timespan {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start_date <= date && date < self.end_date
    }
}

/// Tile `[min date, max date]` with consecutive `weeks`-long spans anchored
/// at the earliest article and assign each article to its span. Spans with
/// no articles inside the range are kept so the tiling has no gaps.
pub fn partition_timespans(
    articles: &[NewsArticle],
    weeks: u32,
) -> Result<Vec<(Timespan, Vec<NewsArticle>)>, CorpusError> {
    if weeks == 0 {
        return Err(CorpusError::InvalidWeeks);
    }
    let min = articles.iter().map(|a| a.published_at).min().ok_or(CorpusError::EmptyCorpus)?;
    let max = articles.iter().map(|a| a.published_at).max().ok_or(CorpusError::EmptyCorpus)?;
    let span_days = 7 * i64::from(weeks);
    let count = ((max - min).num_days() / span_days + 1) as usize;
    let mut spans: Vec<(Timespan, Vec<NewsArticle>)> = (0..count)
        .map(|index| {
            let start_date = min + Duration::days(span_days * index as i64);
            let span = Timespan { index, start_date, end_date: start_date + Duration::days(span_days), weeks };
            (span, Vec::new())
        })
        .collect();
    for a in articles {
        let idx = ((a.published_at - min).num_days() / span_days) as usize;
        spans[idx].1.push(a.clone());
    }
    Ok(spans)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasRating {
    Left,
    LeanLeft,
    Center,
    LeanRight,
    Right,
    #[default]
    Unknown,
}

impl BiasRating {
    pub fn as_str(self) -> &'static str {
        match self {
            BiasRating::Left => "left",
            BiasRating::LeanLeft => "lean_left",
            BiasRating::Center => "center",
            BiasRating::LeanRight => "lean_right",
            BiasRating::Right => "right",
            BiasRating::Unknown => "unknown",
        }
    }
}

impl fmt::Display for BiasRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BiasRating {
    type Err = String;

    /// Parses the five rated categories; `unknown` is only ever a default.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "left" => Ok(BiasRating::Left),
            "lean_left" => Ok(BiasRating::LeanLeft),
            "center" => Ok(BiasRating::Center),
            "lean_right" => Ok(BiasRating::LeanRight),
            "right" => Ok(BiasRating::Right),
            other => Err(format!("unknown bias rating {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceBiasRating {
    pub source_name: String,
    pub rating: BiasRating,
}

fn source_key(name: &str) -> String {
    normalize_whitespace(name).to_lowercase()
}

/// Load a `source,rating` CSV. Source names match case-insensitively.
pub fn load_bias_csv(path: &Path) -> Result<Vec<SourceBiasRating>, CorpusError> {
    let io = |source: std::io::Error| CorpusError::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let bad = |line_no: usize, detail: String| CorpusError::BadBiasRow { path: path.to_path_buf(), line_no, detail };
    let headers = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["source", "rating"] {
        return Err(bad(1, format!("expected header `source,rating`, got {:?}", headers)));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line_no = idx + 2;
        let row = row.map_err(|e| bad(line_no, e.to_string()))?;
        let source_name = row.get(0).unwrap_or_default().to_string();
        if source_name.is_empty() {
            return Err(bad(line_no, "empty source name".to_string()));
        }
        let rating: BiasRating = row.get(1).unwrap_or_default().parse().map_err(|e| bad(line_no, e))?;
        if !seen.insert(source_key(&source_name)) {
            return Err(bad(line_no, format!("duplicate rating for source {source_name:?}")));
        }
        out.push(SourceBiasRating { source_name, rating });
    }
    Ok(out)
}

/// Map every article to its source's rating, defaulting to `unknown`.
pub fn attach_bias(articles: &[NewsArticle], ratings: &[SourceBiasRating]) -> BTreeMap<String, BiasRating> {
    let by_source: BTreeMap<String, BiasRating> =
        ratings.iter().map(|r| (source_key(&r.source_name), r.rating)).collect();
    articles
        .iter()
        .map(|a| (a.id.clone(), by_source.get(&source_key(&a.source_name)).copied().unwrap_or_default()))
        .collect()
}

/// Read-only id lookup over a set of articles.
#[derive(Debug, Clone, Default)]
pub struct ArticleIndex {
    by_id: BTreeMap<String, NewsArticle>,
}

impl ArticleIndex {
    pub fn new<'a>(articles: impl IntoIterator<Item = &'a NewsArticle>) -> Self {
        ArticleIndex { by_id: articles.into_iter().map(|a| (a.id.clone(), a.clone())).collect() }
    }

    pub fn get(&self, id: &str) -> Option<&NewsArticle> {
        self.by_id.get(id)
    }

    pub fn insert(&mut self, article: NewsArticle) {
        self.by_id.insert(article.id.clone(), article);
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NewsArticle> {
        self.by_id.values()
    }
}
