//! Deterministic lexical stand-in for every model capability.
//!
//! Scoring capabilities are pure token-overlap rules. `generate` recognises
//! the built-in prompt kinds by the cue on the prompt's final line and
//! produces structurally valid output (a headline, numbered question lines,
//! or a cited summary); any other prompt yields a hash-derived placeholder.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use super::{
    Capability, CharSpan, ModelProvider, ProviderError, ProviderIdentity, QaAnswer, SamplingParams,
};
use crate::prompts::{HEADLINE_CUE, QUESTIONS_CUE, SUMMARY_CUE};
use crate::text;

const QUESTION_TEMPLATES: &[&str] = &[
    "What are the strategic implications of the {kw} developments?",
    "Why did {kw} become a focal point of the situation?",
    "How will {kw} affect the balance of power in the region?",
    "What motivated the actors involved in {kw}?",
    "What are the humanitarian consequences of {kw}?",
    "How are international partners responding to {kw}?",
];
const QUESTIONS_PER_SET: usize = 4;
const KEYWORD_POOL: usize = 3;

#[derive(Debug, Clone)]
pub struct MockProvider {
    seed: u64,
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        MockProvider { seed }
    }

    fn hash(&self, parts: &[&[u8]]) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        for part in parts {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part);
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
    }

    fn headline(&self, prompt: &str) -> String {
        prompt
            .lines()
            .find_map(|l| l.strip_prefix("Title:"))
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .unwrap_or_else(|| format!("Event {:08x}", self.hash(&[prompt.as_bytes()]) as u32))
    }

    fn questions(&self, prompt: &str, params: &SamplingParams) -> String {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for line in prompt.lines() {
            let Some(body) = line.strip_prefix("Title:").or_else(|| line.strip_prefix("Text:"))
            else {
                continue;
            };
            for token in text::tokenize(body) {
                if token.chars().count() >= 3 && !token.chars().all(|c| c.is_ascii_digit()) {
                    *counts.entry(token).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let keywords: Vec<String> = ranked.into_iter().take(KEYWORD_POOL).map(|(k, _)| k).collect();
        if keywords.is_empty() {
            return String::new();
        }

        let mut lines = vec!["Here are some strategic questions:".to_string()];
        for i in 0..QUESTIONS_PER_SET {
            let h = self.hash(&[prompt.as_bytes(), &params.seed.to_le_bytes(), &(i as u64).to_le_bytes()]);
            let keyword = &keywords[(h % keywords.len() as u64) as usize];
            let template = QUESTION_TEMPLATES[((h >> 16) % QUESTION_TEMPLATES.len() as u64) as usize];
            lines.push(format!("{}. {}", i + 1, template.replace("{kw}", keyword)));
        }
        lines.join("\n")
    }

    fn summary(&self, prompt: &str, instruction: &str) -> String {
        let mut blocks: Vec<(usize, String)> = Vec::new();
        for line in prompt.lines() {
            if let Some((k, rest)) = parse_block_marker(line) {
                blocks.push((k, rest.to_string()));
            }
        }
        let limit = if instruction.contains("2-3 sentences") {
            3
        } else if instruction.contains("4-6 sentences") {
            6
        } else {
            usize::MAX
        };
        let sentences: Vec<String> = blocks
            .iter()
            .take(limit)
            .filter_map(|(k, body)| {
                let first = text::split_sentences(body).into_iter().next()?;
                let cleaned = strip_bracket_numbers(&first);
                let core = cleaned
                    .trim_end_matches(|c: char| matches!(c, '.' | '!' | '?' | '"' | '\'' | ')' | '\u{201d}' | '\u{2019}'))
                    .trim();
                (!core.is_empty()).then(|| format!("{core} [{k}]."))
            })
            .collect();
        if instruction.contains("2 paragraphs") && sentences.len() >= 2 {
            let mid = sentences.len().div_ceil(2);
            format!("{}\n\n{}", sentences[..mid].join(" "), sentences[mid..].join(" "))
        } else {
            sentences.join(" ")
        }
    }
}

fn parse_block_marker(line: &str) -> Option<(usize, &str)> {
    let rest = line.strip_prefix('[')?;
    let close = rest.find(']')?;
    let k: usize = rest[..close].parse().ok()?;
    Some((k, rest[close + 1..].trim()))
}

fn strip_bracket_numbers(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(open) = rest.find('[') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find(']') {
            Some(close) if close > 0 && after[..close].chars().all(|c| c.is_ascii_digit()) => {
                rest = &after[close + 1..];
            }
            _ => {
                out.push('[');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    text::normalize_whitespace(&out)
}

fn normalized_question(s: &str) -> String {
    text::raw_tokens(s).join(" ")
}

impl ModelProvider for MockProvider {
    fn identity(&self, _capability: Capability) -> ProviderIdentity {
        ProviderIdentity { backend: "mock".to_string(), model: format!("lexical-v1/seed={}", self.seed) }
    }

    fn generate(&self, prompt: &str, params: &SamplingParams) -> Result<String, ProviderError> {
        let instruction = prompt
            .lines()
            .rev()
            .find(|l| !l.trim().is_empty())
            .unwrap_or("")
            .to_lowercase();
        let out = if instruction.contains(SUMMARY_CUE) {
            self.summary(prompt, &instruction)
        } else if instruction.contains(QUESTIONS_CUE) {
            self.questions(prompt, params)
        } else if instruction.contains(HEADLINE_CUE) {
            self.headline(prompt)
        } else {
            let h = self.hash(&[prompt.as_bytes(), &params.seed.to_le_bytes()]);
            format!("Generated text {h:016x}.")
        };
        Ok(out)
    }

    /// Span over the first sentence sharing a content word with the
    /// question; confidence is the fraction of question terms matched.
    fn qa_extract(&self, question: &str, passage: &str) -> Result<Option<QaAnswer>, ProviderError> {
        let question_terms = text::content_terms(question);
        if question_terms.is_empty() {
            return Ok(None);
        }
        for range in text::sentence_ranges(passage) {
            let terms = text::content_terms(&passage[range.clone()]);
            let overlap = question_terms.intersection(&terms).count();
            if overlap > 0 {
                let span = CharSpan::new(
                    text::char_offset(passage, range.start),
                    text::char_offset(passage, range.end),
                );
                let confidence = overlap as f64 / question_terms.len() as f64;
                return Ok(Some(QaAnswer { span, confidence }));
            }
        }
        Ok(None)
    }

    fn answer_select(&self, question: &str, passage: &str) -> Result<f64, ProviderError> {
        Ok(text::jaccard(&text::content_terms(question), &text::content_terms(passage)))
    }

    fn duplicate_score(&self, first: &str, second: &str) -> Result<f64, ProviderError> {
        if normalized_question(first) == normalized_question(second) {
            return Ok(1.0);
        }
        let a: BTreeSet<String> = text::raw_tokens(first).into_iter().collect();
        let b: BTreeSet<String> = text::raw_tokens(second).into_iter().collect();
        Ok(text::jaccard(&a, &b))
    }

    /// Fraction of the hypothesis' content terms found in the premise.
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<f64, ProviderError> {
        let h = text::content_terms(hypothesis);
        if h.is_empty() {
            let same = text::normalize_whitespace(premise) == text::normalize_whitespace(hypothesis);
            return Ok(if same { 1.0 } else { 0.0 });
        }
        let p = text::content_terms(premise);
        Ok(h.intersection(&p).count() as f64 / h.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::PromptSet;

    fn mock() -> MockProvider {
        MockProvider::new(7)
    }

    #[test]
    fn duplicate_normalization() {
        assert_eq!(mock().duplicate_score("Why did X?", "why did x?").unwrap(), 1.0);
        assert_eq!(mock().duplicate_score("Why drones?", "What grain exports").unwrap(), 0.0);
        let partial = mock().duplicate_score("why did kyiv", "why did lyman").unwrap();
        assert!((partial - 0.5).abs() < 1e-12);
    }

    #[test]
    fn entail_identity_and_disjoint() {
        let s = "Russian forces withdrew from Lyman.";
        assert_eq!(mock().entail(s, s).unwrap(), 1.0);
        assert_eq!(mock().entail("Grain ships sailed.", s).unwrap(), 0.0);
        assert_eq!(mock().entail("", "").unwrap(), 1.0);
    }

    #[test]
    fn qa_without_overlap_is_none() {
        let got = mock().qa_extract("Why did Lyman fall?", "Grain ships left Odesa. Prices fell.").unwrap();
        assert_eq!(got, None);
    }

    #[test]
    fn qa_spans_first_matching_sentence() {
        let passage = "Grain ships left Odesa. Troops left Lyman quickly. Lyman is quiet.";
        let got = mock().qa_extract("Why did troops leave Lyman?", passage).unwrap().unwrap();
        assert_eq!(text::char_slice(passage, got.span.start..got.span.end), "Troops left Lyman quickly.");
        // question terms {troops, leave, lyman}; matched {troops, lyman}
        assert!((got.confidence - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn headline_echoes_first_title() {
        let prompt = PromptSet::default()
            .headline
            .render(&[("articles", "Title: Lyman retreat\nText: Troops left.\n\nTitle: Other\nText: x")]);
        assert_eq!(mock().generate(&prompt, &SamplingParams::default()).unwrap(), "Lyman retreat");
    }

    #[test]
    fn questions_are_numbered_and_seeded() {
        let prompt = PromptSet::default().questions.render(&[
            ("chapter_name", "Lyman retreat"),
            ("articles", "Title: Lyman retreat\nText: Russian troops retreat from Lyman after encirclement."),
        ]);
        let a = mock().generate(&prompt, &SamplingParams::default()).unwrap();
        let b = mock().generate(&prompt, &SamplingParams::default()).unwrap();
        assert_eq!(a, b);
        let questions: Vec<&str> = a.lines().filter(|l| l.ends_with('?')).collect();
        assert_eq!(questions.len(), QUESTIONS_PER_SET);
        assert!(a.lines().next().unwrap().ends_with(':'));
    }

    #[test]
    fn summary_cites_every_sentence() {
        let prompt = PromptSet::default().summary.render(&[
            ("contexts", "[1] Drones struck Kyiv [4]. More text.\n\n[2] Defenses held firm. Later."),
            ("question", "What happened in Kyiv?"),
            ("length_directive", "Answer in 2-3 sentences."),
        ]);
        let out = mock().generate(&prompt, &SamplingParams::default()).unwrap();
        assert_eq!(out, "Drones struck Kyiv [1]. Defenses held firm [2].");
    }

    #[test]
    fn summary_two_paragraphs() {
        let prompt = PromptSet::default().summary.render(&[
            ("contexts", "[1] A one.\n\n[2] B two.\n\n[3] C three."),
            ("question", "Q?"),
            ("length_directive", "Answer in 2 paragraphs."),
        ]);
        let out = mock().generate(&prompt, &SamplingParams::default()).unwrap();
        assert_eq!(out, "A one [1]. B two [2].\n\nC three [3].");
    }

    #[test]
    fn other_prompts_hash_deterministically() {
        let p = SamplingParams::default();
        let a = mock().generate("hi", &p).unwrap();
        assert_eq!(a, mock().generate("hi", &p).unwrap());
        assert_ne!(a, MockProvider::new(8).generate("hi", &p).unwrap());
        assert!(!a.is_empty());
    }
}
