//! Versioned prompt templates with `{placeholder}` interpolation.
//!
//! Built-in templates live in `prompts/*.v1.txt` and are embedded at compile
//! time; a config may point any of them at a file instead. Every template
//! keeps its instruction on the final line (the mock backend keys on it).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::corpus::NewsArticle;

pub const HEADLINE_V1: &str = include_str!("../prompts/headline.v1.txt");
pub const QUESTIONS_V1: &str = include_str!("../prompts/questions.v1.txt");
pub const SUMMARY_V1: &str = include_str!("../prompts/summary.v1.txt");

/// Final-line cue phrases identifying each prompt kind.
pub const HEADLINE_CUE: &str = "headline";
pub const QUESTIONS_CUE: &str = "strategic questions";
pub const SUMMARY_CUE: &str = "with citations";

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("cannot read prompt template {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("prompt template {name} lacks placeholder {{{placeholder}}}")]
    MissingPlaceholder { name: String, placeholder: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    name: String,
    text: String,
}

impl PromptTemplate {
    pub fn new(
        name: impl Into<String>,
        text: impl Into<String>,
        required: &[&str],
    ) -> Result<Self, PromptError> {
        let template = PromptTemplate { name: name.into(), text: text.into() };
        for placeholder in required {
            if !template.text.contains(&format!("{{{placeholder}}}")) {
                return Err(PromptError::MissingPlaceholder {
                    name: template.name.clone(),
                    placeholder: (*placeholder).to_string(),
                });
            }
        }
        Ok(template)
    }

    pub fn from_file(path: &Path, required: &[&str]) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| PromptError::Io { path: path.display().to_string(), source })?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string());
        Self::new(name, text, required)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Hex SHA-256 of the template text.
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }

    /// Substitute `{key}` occurrences in a single left-to-right pass, so
    /// substituted values are never re-scanned. Unknown placeholders are
    /// left verbatim.
    pub fn render(&self, values: &[(&str, &str)]) -> String {
        let mut out = String::with_capacity(self.text.len() * 2);
        let mut rest = self.text.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let key_len = after
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .unwrap_or(after.len());
            let value = if after[key_len..].starts_with('}') {
                values.iter().find(|(k, _)| *k == &after[..key_len]).map(|(_, v)| *v)
            } else {
                None
            };
            match value {
                Some(v) => {
                    out.push_str(v);
                    rest = &after[key_len + 1..];
                }
                None => {
                    out.push('{');
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        out.trim_end().to_string()
    }
}

/// The three prompt templates a build uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub headline: PromptTemplate,
    pub questions: PromptTemplate,
    pub summary: PromptTemplate,
}

pub const HEADLINE_PLACEHOLDERS: &[&str] = &["articles"];
pub const QUESTIONS_PLACEHOLDERS: &[&str] = &["chapter_name", "articles"];
pub const SUMMARY_PLACEHOLDERS: &[&str] = &["contexts", "question", "length_directive"];

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            headline: PromptTemplate::new("headline.v1", HEADLINE_V1, HEADLINE_PLACEHOLDERS)
                .expect("built-in template"),
            questions: PromptTemplate::new("questions.v1", QUESTIONS_V1, QUESTIONS_PLACEHOLDERS)
                .expect("built-in template"),
            summary: PromptTemplate::new("summary.v1", SUMMARY_V1, SUMMARY_PLACEHOLDERS)
                .expect("built-in template"),
        }
    }
}

impl PromptSet {
    pub fn hashes(&self) -> BTreeMap<String, PromptHash> {
        [("headline", &self.headline), ("questions", &self.questions), ("summary", &self.summary)]
            .into_iter()
            .map(|(k, t)| {
                (k.to_string(), PromptHash { template: t.name().to_string(), sha256: t.sha256() })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct PromptHash {
    pub template: String,
    pub sha256: String,
}

/// Render articles as `Title:` / `Text:` blocks separated by blank lines.
pub fn format_articles<'a>(articles: impl IntoIterator<Item = &'a NewsArticle>) -> String {
    articles
        .into_iter()
        .map(|a| {
            format!(
                "Title: {}\nText: {}",
                crate::text::normalize_whitespace(&a.title),
                crate::text::normalize_whitespace(&a.body)
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}
