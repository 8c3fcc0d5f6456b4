//! Major-event discovery per timespan: TF-IDF vectors, agglomerative
//! clustering, chapter headlines and the corpus-expansion search query.

mod agglomerative;
mod tfidf;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use agglomerative::{agglomerative_cluster, EventCluster};
pub use tfidf::{tfidf_vectorize, TfidfModel, TfidfVector};

use crate::corpus::{ArticleIndex, NewsArticle, Timespan};
use crate::prompts::{format_articles, PromptTemplate};
use crate::providers::{Capability, ModelProvider, ProviderError, SamplingParams};
use crate::text;

/// Upper bound on chapter headline length, in characters.
pub const MAX_HEADLINE_CHARS: usize = 35;

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("cannot vectorize an empty document set")]
    EmptyDocumentSet,
    #[error("chapter headline must not be empty")]
    EmptyHeadline,
    #[error("naming cluster {cluster}: {source}")]
    Provider { cluster: String, source: ProviderError },
    #[error("cluster {cluster} references unknown article {article}")]
    UnknownArticle { cluster: String, article: String },
}

/// A named major event within one timespan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chapter {
    pub id: String,
    pub timespan_index: usize,
    pub headline: String,
    pub cluster: EventCluster,
    /// Cluster members plus any expansion articles attached to the event.
    pub expanded_article_ids: BTreeSet<String>,
    pub retrieval_query: String,
}

/// How dates render in the retrieval query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateStyle {
    /// `yyyy:mm:dd`
    #[default]
    PaperColon,
    /// `yyyy-mm-dd`
    Dash,
}

/// Tokens used for clustering an article: title and body together.
pub fn article_tokens(article: &NewsArticle) -> Vec<String> {
    text::tokenize(&format!("{} {}", article.title, article.body))
}

/// Vectorize and cluster one timespan's articles. Returns the fitted model
/// too, so expansion articles can be projected into the same space.
pub fn cluster_articles(
    articles: &[NewsArticle],
    distance_threshold: f64,
) -> Result<(TfidfModel, Vec<EventCluster>), ClusterError> {
    let docs: Vec<Vec<String>> = articles.iter().map(article_tokens).collect();
    let model = TfidfModel::fit(&docs)?;
    let items: Vec<(String, TfidfVector)> =
        articles.iter().zip(&docs).map(|(a, d)| (a.id.clone(), model.transform(d))).collect();
    Ok((model, agglomerative_cluster(&items, distance_threshold)))
}

/// Cut `raw` to at most `max_chars` characters at the last word boundary.
/// A single over-long word is cut hard. Returns whether anything was cut.
pub fn truncate_headline(raw: &str, max_chars: usize) -> (String, bool) {
    let trimmed = raw.trim();
    if trimmed.chars().count() <= max_chars {
        return (trimmed.to_string(), false);
    }
    let chars: Vec<char> = trimmed.chars().collect();
    let boundary = (1..=max_chars).rev().find(|&i| chars[i].is_whitespace());
    let cut: String = match boundary {
        Some(i) => chars[..i].iter().collect(),
        None => chars[..max_chars].iter().collect(),
    };
    (cut.trim_end().to_string(), true)
}

fn clean_headline(raw: &str) -> String {
    let line = raw.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let line = line.strip_prefix("Headline:").unwrap_or(line).trim();
    let unquoted = line
        .strip_prefix('"')
        .and_then(|l| l.strip_suffix('"'))
        .unwrap_or(line);
    text::normalize_whitespace(unquoted)
}

/// Ask the provider for a short headline over the concatenated titles and
/// texts of the cluster's members (in date, then id, order).
pub fn name_chapter(
    cluster_label: &str,
    cluster: &EventCluster,
    articles: &ArticleIndex,
    provider: &dyn ModelProvider,
    template: &PromptTemplate,
    params: &SamplingParams,
) -> Result<String, ClusterError> {
    let mut members: Vec<&NewsArticle> = cluster
        .member_ids
        .iter()
        .map(|id| {
            articles.get(id).ok_or_else(|| ClusterError::UnknownArticle {
                cluster: cluster_label.to_string(),
                article: id.clone(),
            })
        })
        .collect::<Result<_, _>>()?;
    members.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.id.cmp(&b.id)));
    let prompt = template.render(&[("articles", &format_articles(members))]);
    let raw = provider
        .generate(&prompt, params)
        .map_err(|source| ClusterError::Provider { cluster: cluster_label.to_string(), source })?;
    let cleaned = clean_headline(&raw);
    if cleaned.is_empty() {
        return Err(ClusterError::Provider {
            cluster: cluster_label.to_string(),
            source: ProviderError::ParseFailure {
                capability: Capability::Generate,
                detail: "empty headline".to_string(),
            },
        });
    }
    let (headline, truncated) = truncate_headline(&cleaned, MAX_HEADLINE_CHARS);
    if truncated {
        tracing::info!(cluster = cluster_label, original = %cleaned, %headline, "headline truncated to {MAX_HEADLINE_CHARS} chars");
    }
    Ok(headline)
}

fn render_date(date: chrono::NaiveDate, style: DateStyle) -> String {
    match style {
        DateStyle::PaperColon => date.format("%Y:%m:%d").to_string(),
        DateStyle::Dash => date.format("%Y-%m-%d").to_string(),
    }
}

/// `<headline> after:<start> before:<end>` for the timespan's window.
pub fn format_retrieval_query(headline: &str, span: &Timespan, style: DateStyle) -> Result<String, ClusterError> {
    let headline = headline.trim();
    if headline.is_empty() {
        return Err(ClusterError::EmptyHeadline);
    }
    Ok(format!(
        "{headline} after:{} before:{}",
        render_date(span.start_date, style),
        render_date(span.end_date, style)
    ))
}

/// Attach each expansion article to the chapter whose centroid is nearest,
/// provided its cosine distance is within `distance_threshold`. Ties go to
/// the earlier chapter. Returns one chapter index (or none) per article.
pub fn assign_expansion(
    model: &TfidfModel,
    centroids: &[&TfidfVector],
    articles: &[&NewsArticle],
    distance_threshold: f64,
) -> Vec<Option<usize>> {
    articles
        .iter()
        .map(|a| {
            let v = model.transform(&article_tokens(a));
            let mut best: Option<(f64, usize)> = None;
            for (i, c) in centroids.iter().enumerate() {
                let d = v.cosine_distance(c);
                if d <= distance_threshold && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, i));
                }
            }
            best.map(|(_, i)| i)
        })
        .collect()
}
