//! The situation report tree (timespans, chapters, sections) and its
//! assembly from stage outputs.

mod export;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::clustering::Chapter;
use crate::corpus::{ArticleIndex, ArticleKind, BiasRating, NewsArticle, Timespan};
use crate::extraction::ClaimContext;
use crate::prompts::PromptHash;
use crate::questions::StrategicQuestion;
use crate::summarize::{DetailLevel, GroundedSummary};

pub use export::{export, from_json, render_html, to_json, write_atomic, ExportFormat};

pub const SCHEMA_VERSION: &str = "sitrep/1";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("dangling {kind} reference {id}")]
    DanglingReference { kind: &'static str, id: String },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("section {section} is missing its {level} summary")]
    MissingSummary { section: String, level: DetailLevel },
    #[error("unsupported schema version {0:?}")]
    SchemaVersion(String),
    #[error("unknown export format {0:?} (expected json or html)")]
    UnknownFormat(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionFlag {
    NoRelevantContexts,
}

/// One strategic question and its evidence and summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub id: String,
    pub question: StrategicQuestion,
    pub contexts: Vec<ClaimContext>,
    pub summaries: BTreeMap<DetailLevel, GroundedSummary>,
    pub flags: BTreeSet<SectionFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterEntry {
    pub id: String,
    pub headline: String,
    pub retrieval_query: String,
    pub cluster_size: usize,
    pub member_ids: Vec<String>,
    pub expanded_article_ids: Vec<String>,
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimespanEntry {
    #[serde(flatten)]
    pub timespan: Timespan,
    pub chapters: Vec<ChapterEntry>,
}

/// Article metadata embedded in the report; bodies are left out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub source: String,
    pub url: String,
    #[serde(with = "crate::corpus::iso_date")]
    pub date: chrono::NaiveDate,
    pub title: String,
    pub kind: ArticleKind,
    pub bias: BiasRating,
}

impl ArticleRecord {
    pub fn new(article: &NewsArticle, bias: BiasRating) -> Self {
        ArticleRecord {
            id: article.id.clone(),
            source: article.source_name.clone(),
            url: article.url.clone(),
            date: article.published_at,
            title: article.title.clone(),
            kind: article.kind,
            bias,
        }
    }
}

/// Counters gathered while building; all deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BuildStats {
    pub articles: usize,
    pub chapters: usize,
    pub sections: usize,
    pub contexts: usize,
    pub empty_sections: usize,
    pub dropped_question_lines: usize,
    pub empty_question_sets: usize,
    pub failed_snippets: usize,
    pub dangling_citations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    /// The configuration the report was built from.
    pub config: serde_json::Value,
    /// `backend:model` per capability.
    pub providers: BTreeMap<String, String>,
    pub prompts: BTreeMap<String, PromptHash>,
    pub stats: BuildStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationReport {
    pub schema_version: String,
    pub scenario_name: String,
    pub generated_at: String,
    pub timespans: Vec<TimespanEntry>,
    pub articles: BTreeMap<String, ArticleRecord>,
    pub provenance: Provenance,
}

/// A chapter with its finished sections, as produced by the pipeline.
#[derive(Debug, Clone)]
pub struct ChapterBuild {
    pub chapter: Chapter,
    pub sections: Vec<Section>,
}

/// Everything `assemble_report` needs.
#[derive(Debug, Clone)]
pub struct AssemblyInput<'a> {
    pub scenario_name: String,
    pub generated_at: String,
    pub timespans: Vec<(Timespan, Vec<ChapterBuild>)>,
    pub articles: &'a ArticleIndex,
    pub bias: &'a BTreeMap<String, BiasRating>,
    pub levels: Vec<DetailLevel>,
    pub provenance: Provenance,
}

/// Build the report tree. Chapters are ordered by timespan, then cluster
/// size descending, then smallest member id; sections keep question order.
/// Every id must resolve or assembly fails.
pub fn assemble_report(input: AssemblyInput<'_>) -> Result<SituationReport, ReportError> {
    let mut articles = BTreeMap::new();
    let mut timespans = Vec::new();
    let mut spans = input.timespans;
    spans.sort_by_key(|(t, _)| t.index);
    for (timespan, mut chapters) in spans {
        chapters.sort_by(|a, b| {
            b.chapter
                .cluster
                .len()
                .cmp(&a.chapter.cluster.len())
                .then_with(|| a.chapter.cluster.min_member_id().cmp(b.chapter.cluster.min_member_id()))
        });
        let mut entries = Vec::new();
        for ChapterBuild { chapter, sections } in chapters {
            if sections.is_empty() {
                tracing::warn!(chapter = %chapter.id, "chapter has no sections");
            }
            let referenced = chapter
                .expanded_article_ids
                .iter()
                .chain(&chapter.cluster.member_ids)
                .chain(sections.iter().flat_map(|s| s.contexts.iter().map(|c| &c.article_id)));
            for id in referenced {
                let article = input
                    .articles
                    .get(id)
                    .ok_or_else(|| ReportError::DanglingReference { kind: "article", id: id.clone() })?;
                let bias = input.bias.get(id).copied().unwrap_or_default();
                articles.entry(id.clone()).or_insert_with(|| ArticleRecord::new(article, bias));
            }
            entries.push(ChapterEntry {
                id: chapter.id,
                headline: chapter.headline,
                retrieval_query: chapter.retrieval_query,
                cluster_size: chapter.cluster.member_ids.len(),
                member_ids: chapter.cluster.member_ids,
                expanded_article_ids: chapter.expanded_article_ids.into_iter().collect(),
                sections,
            });
        }
        timespans.push(TimespanEntry { timespan, chapters: entries });
    }
    let report = SituationReport {
        schema_version: SCHEMA_VERSION.to_string(),
        scenario_name: input.scenario_name,
        generated_at: input.generated_at,
        timespans,
        articles,
        provenance: input.provenance,
    };
    report.validate(&input.levels)?;
    Ok(report)
}

impl SituationReport {
    pub fn chapters(&self) -> impl Iterator<Item = &ChapterEntry> {
        self.timespans.iter().flat_map(|t| &t.chapters)
    }

    pub fn sections(&self) -> impl Iterator<Item = &Section> {
        self.chapters().flat_map(|c| &c.sections)
    }

    pub fn contexts(&self) -> impl Iterator<Item = &ClaimContext> {
        self.sections().flat_map(|s| &s.contexts)
    }

    pub fn chapter(&self, id: &str) -> Option<&ChapterEntry> {
        self.chapters().find(|c| c.id == id)
    }

    pub fn section(&self, id: &str) -> Option<&Section> {
        self.sections().find(|s| s.id == id)
    }

    pub fn context(&self, id: &str) -> Option<&ClaimContext> {
        self.contexts().find(|c| c.id == id)
    }

    /// Check id uniqueness and referential closure: every citation resolves
    /// to a context of its section, every context and chapter member to an
    /// embedded article. Sections with contexts need a summary for each of
    /// `levels`.
    pub fn validate(&self, levels: &[DetailLevel]) -> Result<(), ReportError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ReportError::SchemaVersion(self.schema_version.clone()));
        }
        let mut seen = BTreeSet::new();
        let mut unique = |kind: &'static str, id: &str| {
            if seen.insert(id.to_string()) {
                Ok(())
            } else {
                Err(ReportError::DuplicateId { kind, id: id.to_string() })
            }
        };
        let article = |id: &str| {
            if self.articles.contains_key(id) {
                Ok(())
            } else {
                Err(ReportError::DanglingReference { kind: "article", id: id.to_string() })
            }
        };
        for chapter in self.chapters() {
            unique("chapter", &chapter.id)?;
            for id in chapter.member_ids.iter().chain(&chapter.expanded_article_ids) {
                article(id)?;
            }
            for section in &chapter.sections {
                unique("section", &section.id)?;
                if section.question.chapter_ref != chapter.id {
                    return Err(ReportError::DanglingReference { kind: "chapter", id: section.question.chapter_ref.clone() });
                }
                for context in &section.contexts {
                    unique("context", &context.id)?;
                    article(&context.article_id)?;
                    if context.question_ref != section.id {
                        return Err(ReportError::DanglingReference { kind: "section", id: context.question_ref.clone() });
                    }
                }
                if !section.contexts.is_empty() {
                    for &level in levels {
                        if !section.summaries.contains_key(&level) {
                            return Err(ReportError::MissingSummary { section: section.id.clone(), level });
                        }
                    }
                }
                for summary in section.summaries.values() {
                    for sentence in &summary.sentences {
                        for &k in &sentence.citations {
                            if k == 0 || k > section.contexts.len() {
                                return Err(ReportError::DanglingReference {
                                    kind: "context",
                                    id: format!("{}[{k}]", section.id),
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
