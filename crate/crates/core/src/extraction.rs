//! Question-driven claim extraction: QA over article snippets, expansion of
//! each answer to a three-sentence window, and validation-ranked top-k
//! selection.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::{BiasRating, NewsArticle};
use crate::parallel::bounded_map;
use crate::providers::{CharSpan, ModelProvider, ProviderError};
use crate::text;

pub const DEFAULT_SENTENCES_PER_SNIPPET: usize = 5;
pub const DEFAULT_TOP_K: usize = 5;

/// A run of consecutive sentences from one article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleSnippet {
    pub article_id: String,
    /// Half-open sentence index range within the article.
    pub sentence_range: (usize, usize),
    pub text: String,
}

/// A QA answer located in a snippet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerCandidate {
    pub snippet: ArticleSnippet,
    pub answer_span: CharSpan,
    pub extraction_confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerWindow {
    /// Index of the sentence holding the answer start.
    pub answer_sentence: usize,
    /// Half-open sentence index range of the window.
    pub sentence_range: (usize, usize),
    pub text: String,
}

/// One selected piece of evidence for a section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimContext {
    /// `<question id>-k<rank>`, assigned at selection.
    pub id: String,
    pub question_ref: String,
    pub article_id: String,
    pub snippet_range: (usize, usize),
    /// Char range within the snippet text.
    pub answer_span: CharSpan,
    pub answer_text: String,
    /// The window's center sentence.
    pub claim_sentence: String,
    pub window_range: (usize, usize),
    pub window_text: String,
    pub extraction_confidence: f64,
    pub validation_score: f64,
    pub source_bias: BiasRating,
}

/// Snippet-level QA results for one question.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtractionOutcome {
    pub candidates: Vec<AnswerCandidate>,
    /// Snippets whose QA call failed and were skipped.
    pub failed_snippets: usize,
}

fn sentence_text(body: &str, ranges: &[Range<usize>], from: usize, to: usize) -> String {
    body[ranges[from].start..ranges[to - 1].end].to_string()
}

/// Consecutive, non-overlapping snippets of at most `sentences_per_snippet`
/// sentences. A zero size is treated as one.
pub fn split_snippets(article: &NewsArticle, sentences_per_snippet: usize) -> Vec<ArticleSnippet> {
    let size = sentences_per_snippet.max(1);
    let ranges = text::sentence_ranges(&article.body);
    (0..ranges.len())
        .step_by(size)
        .map(|start| {
            let end = (start + size).min(ranges.len());
            ArticleSnippet {
                article_id: article.id.clone(),
                sentence_range: (start, end),
                text: sentence_text(&article.body, &ranges, start, end),
            }
        })
        .collect()
}

/// Run QA over every snippet. Snippets without an answer contribute
/// nothing; provider failures are logged and skipped.
pub fn extract_answers(
    question: &str,
    snippets: &[ArticleSnippet],
    provider: &dyn ModelProvider,
    parallelism: usize,
) -> ExtractionOutcome {
    let results = bounded_map(snippets, parallelism, |s| provider.qa_extract(question, &s.text));
    let mut out = ExtractionOutcome::default();
    for (snippet, result) in snippets.iter().zip(results) {
        match result {
            Ok(Some(answer)) => {
                let len = snippet.text.chars().count();
                if answer.span.start > answer.span.end || answer.span.end > len {
                    tracing::warn!(article = %snippet.article_id, "answer span outside snippet; skipped");
                    out.failed_snippets += 1;
                    continue;
                }
                out.candidates.push(AnswerCandidate {
                    snippet: snippet.clone(),
                    answer_span: answer.span,
                    extraction_confidence: answer.confidence,
                })
            }
            Ok(None) => {}
            Err(e) => {
                tracing::warn!(article = %snippet.article_id, error = %e, "QA failed for snippet; skipped");
                out.failed_snippets += 1;
            }
        }
    }
    out
}

/// The answer's sentence plus one neighbour on each side, clipped at the
/// article bounds. The answer sentence is the one holding the span start.
pub fn expand_window(candidate: &AnswerCandidate, article: &NewsArticle) -> AnswerWindow {
    let body = &article.body;
    let ranges = text::sentence_ranges(body);
    let (first, last) = candidate.snippet.sentence_range;
    debug_assert!(first < last && last <= ranges.len());
    let snippet_start_char = text::char_offset(body, ranges[first].start);
    let target = snippet_start_char + candidate.answer_span.start;
    let answer_sentence = (first..last)
        .rev()
        .find(|&i| text::char_offset(body, ranges[i].start) <= target)
        .unwrap_or(first);
    let from = answer_sentence.saturating_sub(1);
    let to = (answer_sentence + 2).min(ranges.len());
    AnswerWindow {
        answer_sentence,
        sentence_range: (from, to),
        text: sentence_text(body, &ranges, from, to),
    }
}

/// Build an unscored context from a candidate and its article.
pub fn to_context(question_ref: &str, candidate: &AnswerCandidate, article: &NewsArticle, bias: BiasRating) -> ClaimContext {
    let window = expand_window(candidate, article);
    let ranges = text::sentence_ranges(&article.body);
    let span = candidate.answer_span;
    ClaimContext {
        id: String::new(),
        question_ref: question_ref.to_string(),
        article_id: article.id.clone(),
        snippet_range: candidate.snippet.sentence_range,
        answer_span: span,
        answer_text: text::char_slice(&candidate.snippet.text, span.start..span.end).to_string(),
        claim_sentence: article.body[ranges[window.answer_sentence].clone()].to_string(),
        window_range: window.sentence_range,
        window_text: window.text,
        extraction_confidence: candidate.extraction_confidence,
        validation_score: 0.0,
        source_bias: bias,
    }
}

/// Score each candidate window with the answer-selection judge, sort by
/// score descending (ties by article id, then answer position), keep the
/// top `k`, and assign context ids by rank.
pub fn validate_and_select(
    question_id: &str,
    question: &str,
    mut candidates: Vec<ClaimContext>,
    judge: &dyn ModelProvider,
    k: usize,
    parallelism: usize,
) -> Result<Vec<ClaimContext>, ProviderError> {
    let scores = bounded_map(&candidates, parallelism, |c| judge.answer_select(question, &c.window_text));
    for (c, score) in candidates.iter_mut().zip(scores) {
        c.validation_score = score?;
    }
    candidates.sort_by(|a, b| {
        b.validation_score
            .total_cmp(&a.validation_score)
            .then_with(|| a.article_id.cmp(&b.article_id))
            .then_with(|| a.snippet_range.cmp(&b.snippet_range))
            .then_with(|| a.answer_span.start.cmp(&b.answer_span.start))
    });
    candidates.truncate(k);
    for (rank, c) in candidates.iter_mut().enumerate() {
        c.id = format!("{question_id}-k{}", rank + 1);
        c.question_ref = question_id.to_string();
    }
    Ok(candidates)
}
