//! Strategic questions as section headings: several sampled question sets
//! per chapter, merged by a greedy duplicate filter.

use serde::{Deserialize, Serialize};

use crate::clustering::Chapter;
use crate::corpus::{ArticleIndex, NewsArticle};
use crate::parallel::bounded_map;
use crate::prompts::{format_articles, PromptTemplate};
use crate::providers::{ModelProvider, ProviderError, SamplingParams};

#[derive(Debug, thiserror::Error)]
pub enum QuestionError {
    #[error("at least one question set must be requested")]
    InvalidSetCount,
    #[error("chapter {0} has no articles")]
    NoArticles(String),
    #[error("chapter {chapter}: {source}")]
    Provider { chapter: String, source: ProviderError },
    #[error("de-duplication needs at least one non-empty question set")]
    NoQuestions,
    #[error("duplicate threshold must be in [0, 1], got {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategicQuestion {
    pub chapter_ref: String,
    /// Always ends with `?`.
    pub text: String,
    /// Which sampled set produced the question.
    pub set_index: usize,
}

/// Output of the sampling stage for one chapter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuestionSets {
    /// Non-empty sets in sampling order; empty generations are skipped.
    pub sets: Vec<Vec<StrategicQuestion>>,
    /// Lines discarded because they did not end with `?`.
    pub dropped_lines: usize,
    /// Sampled sets that parsed to zero questions.
    pub empty_sets: usize,
}

fn strip_list_marker(line: &str) -> &str {
    let line = line.trim();
    let line = line.trim_start_matches(['-', '*', '\u{2022}']).trim_start();
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    let after_q = line
        .strip_prefix('Q')
        .map(|rest| rest.trim_start_matches(|c: char| c.is_ascii_digit()));
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(stripped) = rest.strip_prefix(['.', ')', ':']) {
            return stripped.trim_start();
        }
    } else if let Some(rest) = after_q {
        if let Some(stripped) = rest.strip_prefix([':', '.']) {
            return stripped.trim_start();
        }
    }
    line
}

/// One question per line; numbering and bullets are stripped, blank lines
/// ignored, and lines not ending in `?` dropped. Returns the kept questions
/// and the number of dropped lines.
pub fn parse_question_lines(raw: &str) -> (Vec<String>, usize) {
    let mut kept = Vec::new();
    let mut dropped = 0;
    for line in raw.lines() {
        let q = crate::text::normalize_whitespace(strip_list_marker(line));
        if q.is_empty() {
            continue;
        }
        if q.ends_with('?') {
            kept.push(q);
        } else {
            dropped += 1;
        }
    }
    (kept, dropped)
}

/// The chapter's articles in date, then id, order.
pub fn chapter_articles<'a>(chapter: &Chapter, articles: &'a ArticleIndex) -> Vec<&'a NewsArticle> {
    let mut out: Vec<&NewsArticle> =
        chapter.expanded_article_ids.iter().filter_map(|id| articles.get(id)).collect();
    out.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.id.cmp(&b.id)));
    out
}

/// Sample `n_sets` question sets for a chapter. Set `i` uses seed
/// `sampling.seed + i` so samples differ while staying reproducible.
pub fn generate_question_sets(
    chapter: &Chapter,
    articles: &ArticleIndex,
    n_sets: usize,
    sampling: &SamplingParams,
    provider: &dyn ModelProvider,
    template: &PromptTemplate,
    parallelism: usize,
) -> Result<QuestionSets, QuestionError> {
    if n_sets == 0 {
        return Err(QuestionError::InvalidSetCount);
    }
    let members = chapter_articles(chapter, articles);
    if members.is_empty() {
        return Err(QuestionError::NoArticles(chapter.id.clone()));
    }
    let prompt = template.render(&[
        ("chapter_name", chapter.headline.as_str()),
        ("articles", &format_articles(members)),
    ]);
    let indices: Vec<usize> = (0..n_sets).collect();
    let raw = bounded_map(&indices, parallelism, |&i| {
        provider.generate(&prompt, &sampling.with_seed(sampling.seed.wrapping_add(i as u64)))
    });

    let mut out = QuestionSets::default();
    for (set_index, result) in raw.into_iter().enumerate() {
        let text = result.map_err(|source| QuestionError::Provider { chapter: chapter.id.clone(), source })?;
        let (questions, dropped) = parse_question_lines(&text);
        out.dropped_lines += dropped;
        if questions.is_empty() {
            tracing::warn!(chapter = %chapter.id, set_index, "question set parsed to zero questions; skipped");
            out.empty_sets += 1;
            continue;
        }
        out.sets.push(
            questions
                .into_iter()
                .map(|text| StrategicQuestion { chapter_ref: chapter.id.clone(), text, set_index })
                .collect(),
        );
    }
    if out.dropped_lines > 0 {
        tracing::debug!(chapter = %chapter.id, dropped = out.dropped_lines, "non-question lines dropped");
    }
    Ok(out)
}

/// Greedy first-kept-wins filter over the concatenated sets: a question is
/// kept iff its duplicate score against every already-kept question is
/// below `threshold`.
pub fn deduplicate_questions(
    sets: &[Vec<StrategicQuestion>],
    judge: &dyn ModelProvider,
    threshold: f64,
) -> Result<Vec<StrategicQuestion>, QuestionError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(QuestionError::InvalidThreshold(threshold));
    }
    if sets.iter().all(Vec::is_empty) {
        return Err(QuestionError::NoQuestions);
    }
    let mut kept: Vec<StrategicQuestion> = Vec::new();
    for candidate in sets.iter().flatten() {
        let mut unique = true;
        for existing in &kept {
            let score = judge
                .duplicate_score(&existing.text, &candidate.text)
                .map_err(|source| QuestionError::Provider { chapter: candidate.chapter_ref.clone(), source })?;
            if score >= threshold {
                unique = false;
                break;
            }
        }
        if unique {
            kept.push(candidate.clone());
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{EventCluster, TfidfVector};
    use crate::corpus::{parse_date, ArticleKind};
    use crate::prompts::PromptSet;
    use crate::providers::{Capability, MockProvider, ProviderIdentity, QaAnswer};
    use std::collections::BTreeSet;

    fn q(text: &str, set_index: usize) -> StrategicQuestion {
        StrategicQuestion { chapter_ref: "c".into(), text: text.into(), set_index }
    }

    fn texts(qs: &[StrategicQuestion]) -> Vec<&str> {
        qs.iter().map(|q| q.text.as_str()).collect()
    }

    /// Exact-match judge: 1.0 for identical strings, else 0.0.
    struct ExactJudge;

    impl ModelProvider for ExactJudge {
        fn identity(&self, _: Capability) -> ProviderIdentity {
            ProviderIdentity { backend: "exact".into(), model: "x".into() }
        }
        fn generate(&self, _: &str, _: &SamplingParams) -> Result<String, ProviderError> {
            Ok("What now?\nThe war continues.\n\n2) Who benefits?".into())
        }
        fn qa_extract(&self, _: &str, _: &str) -> Result<Option<QaAnswer>, ProviderError> {
            Ok(None)
        }
        fn answer_select(&self, _: &str, _: &str) -> Result<f64, ProviderError> {
            Ok(0.0)
        }
        fn duplicate_score(&self, a: &str, b: &str) -> Result<f64, ProviderError> {
            Ok(if a == b { 1.0 } else { 0.0 })
        }
        fn entail(&self, _: &str, _: &str) -> Result<f64, ProviderError> {
            Ok(0.0)
        }
    }

    fn chapter() -> (Chapter, ArticleIndex) {
        let article = NewsArticle {
            id: "a1".into(),
            source_name: "CNN".into(),
            url: "u".into(),
            published_at: parse_date("2022-10-02").unwrap(),
            title: "Lyman retreat".into(),
            body: "Russian troops retreat from Lyman after encirclement.".into(),
            kind: ArticleKind::Snippet,
        };
        let chapter = Chapter {
            id: "t0-c1".into(),
            timespan_index: 0,
            headline: "Lyman retreat".into(),
            cluster: EventCluster { member_ids: vec!["a1".into()], centroid: TfidfVector::default() },
            expanded_article_ids: BTreeSet::from(["a1".to_string()]),
            retrieval_query: String::new(),
        };
        (chapter, ArticleIndex::new([&article]))
    }

    #[test]
    fn parse_strips_markers_and_filters() {
        let (kept, dropped) = parse_question_lines("Here they are:\n1. Why now?\n- Who gains?\nQ3: What next?\nThe war continues.\n\n");
        assert_eq!(kept, vec!["Why now?", "Who gains?", "What next?"]);
        assert_eq!(dropped, 2);
    }

    #[test]
    fn sets_from_fixed_provider() {
        let (ch, idx) = chapter();
        let got = generate_question_sets(&ch, &idx, 2, &SamplingParams::default(), &ExactJudge, &PromptSet::default().questions, 2).unwrap();
        assert_eq!(got.sets.len(), 2);
        assert_eq!(texts(&got.sets[1]), ["What now?", "Who benefits?"]);
        assert_eq!(got.sets[1][0].set_index, 1);
        assert_eq!(got.dropped_lines, 2);
    }

    #[test]
    fn mock_sets_are_deterministic() {
        let (ch, idx) = chapter();
        let run = || {
            generate_question_sets(&ch, &idx, 3, &SamplingParams::default(), &MockProvider::new(5), &PromptSet::default().questions, 3).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.sets.len(), 3);
        assert!(a.sets.iter().all(|s| s.len() == 4));
    }

    #[test]
    fn zero_sets_rejected() {
        let (ch, idx) = chapter();
        let err = generate_question_sets(&ch, &idx, 0, &SamplingParams::default(), &ExactJudge, &PromptSet::default().questions, 1);
        assert!(matches!(err, Err(QuestionError::InvalidSetCount)));
    }

    #[test]
    fn identical_questions_collapse() {
        let sets = vec![vec![q("Why did Lyman fall?", 0), q("Why did Lyman fall?", 0)]];
        let got = deduplicate_questions(&sets, &MockProvider::new(0), 0.5).unwrap();
        assert_eq!(texts(&got), ["Why did Lyman fall?"]);
    }

    #[test]
    fn disjoint_questions_all_kept() {
        let sets = vec![vec![q("Why Lyman?", 0), q("Grain exports?", 0), q("Kerch bridge?", 0)]];
        let got = deduplicate_questions(&sets, &MockProvider::new(0), 0.5).unwrap();
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn greedy_trace_across_sets() {
        let sets = vec![vec![q("q1?", 0), q("q2?", 0)], vec![q("q2?", 1), q("q3?", 1)]];
        let got = deduplicate_questions(&sets, &ExactJudge, 0.5).unwrap();
        assert_eq!(texts(&got), ["q1?", "q2?", "q3?"]);
        assert_eq!(got[1].set_index, 0);
    }

    #[test]
    fn threshold_zero_keeps_one() {
        let sets = vec![vec![q("a?", 0), q("b?", 0)], vec![q("c?", 1)]];
        let got = deduplicate_questions(&sets, &ExactJudge, 0.0).unwrap();
        assert_eq!(texts(&got), ["a?"]);
    }

    #[test]
    fn dedup_preconditions() {
        assert!(matches!(deduplicate_questions(&[vec![]], &ExactJudge, 0.5), Err(QuestionError::NoQuestions)));
        assert!(matches!(deduplicate_questions(&[vec![q("a?", 0)]], &ExactJudge, 1.5), Err(QuestionError::InvalidThreshold(_))));
    }
}
