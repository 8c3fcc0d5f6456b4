use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// A generated summary and its human-edited version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditPair {
    pub generated: String,
    pub edited: String,
    #[serde(default, alias = "question_ref", skip_serializing_if = "Option::is_none")]
    pub question_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditMetrics {
    pub bleu: f64,
    pub rouge_l_f1: f64,
    pub levenshtein_char: usize,
    pub levenshtein_normalized: f64,
    pub tokens_inserted_pct: f64,
    pub tokens_deleted_pct: f64,
    pub unedited: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeL {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unit-cost edit distance over arbitrary sequences (single-row DP).
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut stack = [0usize; 64];
    let mut heap = Vec::new();
    let row: &mut [usize] = if b.len() < stack.len() {
        &mut stack[..=b.len()]
    } else {
        heap.resize(b.len() + 1, 0);
        &mut heap
    };
    for (j, cell) in row.iter_mut().enumerate() {
        *cell = j;
    }
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = (diag + usize::from(x != y)).min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[b.len()]
}

/// Character-level distance and its value divided by the longer length
/// (0 when both strings are empty).
pub fn levenshtein(a: &str, b: &str) -> (usize, f64) {
    let (d, longest) = if a.is_ascii() && b.is_ascii() {
        (edit_distance(a.as_bytes(), b.as_bytes()), a.len().max(b.len()))
    } else {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        (edit_distance(&a, &b), a.len().max(b.len()))
    };
    (d, if longest == 0 { 0.0 } else { d as f64 / longest as f64 })
}

fn lowered_tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_default() += 1;
    }
    counts
}

/// Sentence BLEU without smoothing. The n-gram order is capped at the
/// candidate length so short candidates stay defined.
pub fn bleu(candidate: &str, reference: &str, max_n: usize) -> f64 {
    let cand = lowered_tokens(candidate);
    let refr = lowered_tokens(reference);
    let n_max = max_n.min(cand.len());
    if n_max == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=n_max {
        let ref_counts = ngram_counts(&refr, n);
        let matched: usize = ngram_counts(&cand, n)
            .into_iter()
            .map(|(gram, c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        if matched == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / (cand.len() + 1 - n) as f64).ln();
    }
    let bp = (1.0 - refr.len() as f64 / cand.len() as f64).min(0.0).exp();
    bp * (log_sum / n_max as f64).exp()
}

/// ROUGE-L from the token LCS.
pub fn rouge_l(candidate: &str, reference: &str) -> RougeL {
    let cand = lowered_tokens(candidate);
    let refr = lowered_tokens(reference);
    if cand.is_empty() || refr.is_empty() {
        return RougeL { precision: 0.0, recall: 0.0, f1: 0.0 };
    }
    let lcs = lcs_len(&cand, &refr) as f64;
    let precision = lcs / cand.len() as f64;
    let recall = lcs / refr.len() as f64;
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    RougeL { precision, recall, f1 }
}

/// Inserted and deleted token counts from an LCS alignment, each divided
/// by the generated token count. Insertions can exceed 1.
pub fn token_churn(pair: &EditPair) -> (f64, f64) {
    let generated: Vec<&str> = pair.generated.split_whitespace().collect();
    let edited: Vec<&str> = pair.edited.split_whitespace().collect();
    if generated.is_empty() {
        return (0.0, 0.0);
    }
    let lcs = lcs_len(&generated, &edited);
    let base = generated.len() as f64;
    ((edited.len() - lcs) as f64 / base, (generated.len() - lcs) as f64 / base)
}

/// All edit-study metrics, with the edited text as reference.
pub fn edit_metrics(pair: &EditPair) -> EditMetrics {
    let (levenshtein_char, levenshtein_normalized) = levenshtein(&pair.generated, &pair.edited);
    let (tokens_inserted_pct, tokens_deleted_pct) = token_churn(pair);
    EditMetrics {
        bleu: bleu(&pair.generated, &pair.edited, 4),
        rouge_l_f1: rouge_l(&pair.generated, &pair.edited).f1,
        levenshtein_char,
        levenshtein_normalized,
        tokens_inserted_pct,
        tokens_deleted_pct,
        unedited: pair.generated == pair.edited,
    }
}

/// Means over a set of edit pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditStudy {
    pub pairs: usize,
    pub mean_bleu: f64,
    pub mean_rouge_l_f1: f64,
    pub mean_levenshtein_char: f64,
    pub mean_levenshtein_normalized: f64,
    /// Denominator used for `levenshtein_normalized`.
    pub levenshtein_normalization: String,
    pub mean_tokens_inserted_pct: f64,
    pub mean_tokens_deleted_pct: f64,
    pub unedited_fraction: f64,
    pub per_pair: Vec<EditMetrics>,
}

pub fn edit_study(pairs: &[EditPair]) -> EditStudy {
    let per_pair: Vec<EditMetrics> = pairs.iter().map(edit_metrics).collect();
    let n = per_pair.len();
    let mean = |f: &dyn Fn(&EditMetrics) -> f64| if n == 0 { 0.0 } else { per_pair.iter().map(f).sum::<f64>() / n as f64 };
    EditStudy {
        pairs: n,
        mean_bleu: mean(&|m| m.bleu),
        mean_rouge_l_f1: mean(&|m| m.rouge_l_f1),
        mean_levenshtein_char: mean(&|m| m.levenshtein_char as f64),
        mean_levenshtein_normalized: mean(&|m| m.levenshtein_normalized),
        levenshtein_normalization: "max_len".to_string(),
        mean_tokens_inserted_pct: mean(&|m| m.tokens_inserted_pct),
        mean_tokens_deleted_pct: mean(&|m| m.tokens_deleted_pct),
        unedited_fraction: mean(&|m| f64::from(u8::from(m.unedited))),
        per_pair,
    }
}
