use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::extraction::ClaimContext;
use crate::providers::ModelProvider;
use crate::summarize::GroundedSummary;

/// Entailment-based citation quality of one or more summaries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CitationQuality {
    pub precision: f64,
    pub recall: f64,
    pub coverage: f64,
    pub multi_citation_rate: f64,
    pub sentences: usize,
    pub citations: usize,
}

/// Raw counts, so several summaries can be pooled before dividing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CitationCounts {
    pub sentences: usize,
    pub supported_sentences: usize,
    pub cited_sentences: usize,
    pub multi_cited_sentences: usize,
    pub citations: usize,
    pub precise_citations: usize,
}

impl CitationCounts {
    pub fn add(&mut self, other: &CitationCounts) {
        self.sentences += other.sentences;
        self.supported_sentences += other.supported_sentences;
        self.cited_sentences += other.cited_sentences;
        self.multi_cited_sentences += other.multi_cited_sentences;
        self.citations += other.citations;
        self.precise_citations += other.precise_citations;
    }

    pub fn quality(&self) -> CitationQuality {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        CitationQuality {
            precision: ratio(self.precise_citations, self.citations),
            recall: ratio(self.supported_sentences, self.sentences),
            coverage: ratio(self.cited_sentences, self.sentences),
            multi_citation_rate: ratio(self.multi_cited_sentences, self.sentences),
            sentences: self.sentences,
            citations: self.citations,
        }
    }
}

fn joined(contexts: &[ClaimContext], indices: impl IntoIterator<Item = usize>) -> String {
    indices.into_iter().map(|k| contexts[k - 1].window_text.as_str()).collect::<Vec<_>>().join(" ")
}

/// Count supported sentences and precise citations.
///
/// A sentence is supported when the concatenation of its cited contexts
/// entails it. With two or more citations and joint support, a citation is
/// precise if its context alone entails the sentence, or if dropping it
/// leaves the rest unable to. A lone citation is precise iff it supports
/// the sentence. Citations of unsupported sentences are never precise.
pub fn citation_counts(
    summary: &GroundedSummary,
    contexts: &[ClaimContext],
    judge: &dyn ModelProvider,
    entail_threshold: f64,
) -> Result<CitationCounts, EvalError> {
    let entails = |indices: &[usize], sentence: &str| -> Result<bool, EvalError> {
        Ok(judge.entail(&joined(contexts, indices.iter().copied()), sentence)? >= entail_threshold)
    };
    let mut counts = CitationCounts { sentences: summary.sentences.len(), ..Default::default() };
    for sentence in &summary.sentences {
        let cited = &sentence.citations;
        if let Some(&bad) = cited.iter().find(|&&k| k == 0 || k > contexts.len()) {
            return Err(EvalError::DanglingCitation { question: summary.question_ref.clone(), index: bad });
        }
        if cited.is_empty() {
            continue;
        }
        counts.cited_sentences += 1;
        counts.citations += cited.len();
        if cited.len() >= 2 {
            counts.multi_cited_sentences += 1;
        }
        if !entails(cited, &sentence.text)? {
            continue;
        }
        counts.supported_sentences += 1;
        if cited.len() == 1 {
            counts.precise_citations += 1;
            continue;
        }
        for (i, &k) in cited.iter().enumerate() {
            let precise = entails(&[k], &sentence.text)? || {
                let rest: Vec<usize> = cited.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &c)| c).collect();
                !entails(&rest, &sentence.text)?
            };
            if precise {
                counts.precise_citations += 1;
            }
        }
    }
    Ok(counts)
}

/// Precision, recall, coverage and multi-citation rate of one summary.
pub fn citation_quality(
    summary: &GroundedSummary,
    contexts: &[ClaimContext],
    judge: &dyn ModelProvider,
    entail_threshold: f64,
) -> Result<CitationQuality, EvalError> {
    Ok(citation_counts(summary, contexts, judge, entail_threshold)?.quality())
}
