//! Cited query-focused summaries at three detail levels, and parsing of
//! their `[k]` citation markers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::extraction::ClaimContext;
use crate::prompts::PromptTemplate;
use crate::providers::{ModelProvider, ProviderError, SamplingParams};
use crate::text;

#[derive(Debug, thiserror::Error)]
pub enum SummaryError {
    #[error("no contexts to summarize for question {0}")]
    EmptyContexts(String),
    #[error("empty generation for question {0}")]
    EmptyGeneration(String),
    #[error("question {question}: {source}")]
    Provider { question: String, source: ProviderError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetailLevel {
    LessDetailed,
    Normal,
    MoreDetailed,
}

impl DetailLevel {
    pub const ALL: [DetailLevel; 3] = [DetailLevel::LessDetailed, DetailLevel::Normal, DetailLevel::MoreDetailed];

    pub fn as_str(self) -> &'static str {
        match self {
            DetailLevel::LessDetailed => "less_detailed",
            DetailLevel::Normal => "normal",
            DetailLevel::MoreDetailed => "more_detailed",
        }
    }

    /// Length directive appended to the summary instruction.
    pub fn directive(self) -> &'static str {
        match self {
            DetailLevel::LessDetailed => "Answer in 2-3 sentences.",
            DetailLevel::Normal => "Answer in 4-6 sentences.",
            DetailLevel::MoreDetailed => "Answer in 2 paragraphs.",
        }
    }
}

impl fmt::Display for DetailLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitedSentence {
    /// Sentence with markers removed, whitespace normalized.
    pub text: String,
    /// The sentence as it appeared, markers included.
    pub raw: String,
    /// Valid 1-based context indices in order of first appearance.
    pub citations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParsedCitations {
    pub sentences: Vec<CitedSentence>,
    /// Valid markers, repeats included.
    pub valid_markers: usize,
    /// Markers whose index was 0 or beyond the context count.
    pub dangling: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedSummary {
    pub question_ref: String,
    pub level: DetailLevel,
    pub sentences: Vec<CitedSentence>,
    pub raw_text: String,
    pub dangling_citations: usize,
}

impl GroundedSummary {
    /// Fraction of sentences carrying at least one citation.
    pub fn citation_coverage(&self) -> f64 {
        if self.sentences.is_empty() {
            return 0.0;
        }
        self.sentences.iter().filter(|s| !s.citations.is_empty()).count() as f64 / self.sentences.len() as f64
    }
}

/// `[1] window\n\n[2] window...` followed by the instruction for `level`.
pub fn build_summary_prompt(
    question_id: &str,
    question: &str,
    contexts: &[ClaimContext],
    level: DetailLevel,
    template: &PromptTemplate,
) -> Result<String, SummaryError> {
    if contexts.is_empty() {
        return Err(SummaryError::EmptyContexts(question_id.to_string()));
    }
    let blocks: Vec<String> = contexts
        .iter()
        .enumerate()
        .map(|(i, c)| format!("[{}] {}", i + 1, text::normalize_whitespace(&c.window_text)))
        .collect();
    Ok(template.render(&[
        ("contexts", &blocks.join("\n\n")),
        ("question", question),
        ("length_directive", level.directive()),
    ]))
}

pub fn generate_summary(
    question_id: &str,
    prompt: &str,
    provider: &dyn ModelProvider,
    params: &SamplingParams,
) -> Result<String, SummaryError> {
    let raw = provider
        .generate(prompt, params)
        .map_err(|source| SummaryError::Provider { question: question_id.to_string(), source })?;
    if raw.trim().is_empty() {
        return Err(SummaryError::EmptyGeneration(question_id.to_string()));
    }
    Ok(raw.trim().to_string())
}

/// Byte ranges and values of every `[digits]` marker in `s`.
fn markers(s: &str) -> Vec<(std::ops::Range<usize>, Option<usize>)> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'[' {
            let digits = bytes[i + 1..].iter().take_while(|b| b.is_ascii_digit()).count();
            let close = i + 1 + digits;
            if digits > 0 && close < bytes.len() && bytes[close] == b']' {
                out.push((i..close + 1, s[i + 1..close].parse().ok()));
                i = close + 1;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Length of the run of markers (and whitespace between them) at the start
/// of `s`.
fn leading_marker_len(s: &str) -> usize {
    let mut end = 0;
    for (range, _) in markers(s) {
        if !s[end..range.start].trim().is_empty() {
            break;
        }
        end = range.end;
    }
    end
}

/// Split `raw_text` into sentences and pull out `[k]` markers. Markers
/// opening a sentence belong to the one before it ("Kyiv. [1] Next").
pub fn parse_citations(raw_text: &str, n_contexts: usize) -> ParsedCitations {
    let mut segments: Vec<String> = Vec::new();
    for range in text::sentence_ranges(raw_text) {
        let seg = &raw_text[range];
        let lead = leading_marker_len(seg);
        if lead > 0 {
            if let Some(prev) = segments.last_mut() {
                prev.push(' ');
                prev.push_str(&seg[..lead]);
                let rest = seg[lead..].trim();
                if !rest.is_empty() {
                    segments.push(rest.to_string());
                }
                continue;
            }
        }
        segments.push(seg.to_string());
    }

    let mut out = ParsedCitations::default();
    for raw in segments {
        let mut citations = Vec::new();
        let mut plain = String::with_capacity(raw.len());
        let mut last = 0;
        for (range, value) in markers(&raw) {
            plain.push_str(&raw[last..range.start]);
            last = range.end;
            match value {
                Some(k) if (1..=n_contexts).contains(&k) => {
                    out.valid_markers += 1;
                    if !citations.contains(&k) {
                        citations.push(k);
                    }
                }
                _ => out.dangling += 1,
            }
        }
        plain.push_str(&raw[last..]);
        let text = tidy_plain(&plain);
        out.sentences.push(CitedSentence { text, raw: text::normalize_whitespace(&raw), citations });
    }
    out
}

/// Collapse whitespace and drop spaces left before punctuation by removed
/// markers ("Kyiv [1]." becomes "Kyiv.").
fn tidy_plain(s: &str) -> String {
    let collapsed = text::normalize_whitespace(s);
    let mut out = String::with_capacity(collapsed.len());
    for c in collapsed.chars() {
        if matches!(c, '.' | ',' | ';' | ':' | '!' | '?') && out.ends_with(' ') {
            out.pop();
        }
        out.push(c);
    }
    out
}

/// Re-join parsed sentences with their markers.
pub fn render_sentences(sentences: &[CitedSentence]) -> String {
    sentences.iter().map(|s| s.raw.as_str()).collect::<Vec<_>>().join(" ")
}

/// Generate and parse one summary.
pub fn summarize_section(
    question_id: &str,
    question: &str,
    contexts: &[ClaimContext],
    level: DetailLevel,
    template: &PromptTemplate,
    provider: &dyn ModelProvider,
    params: &SamplingParams,
) -> Result<GroundedSummary, SummaryError> {
    let prompt = build_summary_prompt(question_id, question, contexts, level, template)?;
    let raw_text = generate_summary(question_id, &prompt, provider, params)?;
    let parsed = parse_citations(&raw_text, contexts.len());
    if parsed.dangling > 0 {
        tracing::warn!(question = question_id, %level, dangling = parsed.dangling, "summary cites contexts that do not exist");
    }
    Ok(GroundedSummary {
        question_ref: question_id.to_string(),
        level,
        sentences: parsed.sentences,
        raw_text,
        dangling_citations: parsed.dangling,
    })
}
