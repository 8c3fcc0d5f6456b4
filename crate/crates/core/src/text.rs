//! Tokenization, stopwords and rule-based sentence segmentation shared by
//! every stage.

use std::collections::BTreeSet;
use std::ops::Range;

/// Small built-in English stopword list used for TF-IDF and keyword overlap.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few",
    "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "may", "me", "might", "more", "most", "must", "my", "myself", "no", "nor",
    "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves",
    "out", "over", "own", "said", "same", "says", "she", "should", "so", "some", "such", "than",
    "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they",
    "this", "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were",
    "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would",
    "you", "your", "yours", "yourself", "yourselves",
];

/// Abbreviations whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "gen", "lt", "col", "maj", "capt", "sgt",
    "gov", "sen", "rep", "pres", "no", "vs", "etc", "e.g", "i.e", "u.s", "u.k", "u.n", "inc",
    "ltd", "co", "corp", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct",
    "nov", "dec", "approx", "est", "dept", "fig",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercase and split on non-alphanumeric characters. Keeps stopwords.
pub fn raw_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lowercase, split on non-alphanumeric characters and drop stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    raw_tokens(text)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .collect()
}

/// Distinct content tokens of `text`.
pub fn content_terms(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().collect()
}

/// Collapse runs of whitespace into single spaces and trim.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Jaccard similarity of two token sets; 1.0 when both are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201d}' | '\u{2019}' | ')')
}

fn ends_with_abbreviation(text: &str, period_at: usize) -> bool {
    let before = &text[..period_at];
    let word = before
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric());
    if word.is_empty() {
        return false;
    }
    let lower = word.to_lowercase();
    // Single-letter initials ("J. Smith").
    if lower.chars().count() == 1 && lower.chars().all(char::is_alphabetic) {
        return true;
    }
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Byte ranges of the sentences of `text`, trimmed of surrounding whitespace.
///
/// A boundary is a run of terminal punctuation, optionally followed by
/// closing quotes or parentheses, then whitespace, then a character that is
/// not lowercase. A period after a known abbreviation or a single-letter
/// initial is not a boundary.
pub fn sentence_ranges(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < chars.len() && is_terminal(chars[j + 1].1) {
            j += 1;
        }
        while j + 1 < chars.len() && is_closing(chars[j + 1].1) {
            j += 1;
        }
        let end = chars[j].0 + chars[j].1.len_utf8();
        let mut k = j + 1;
        if k < chars.len() && !chars[k].1.is_whitespace() {
            i = j + 1;
            continue;
        }
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let next_ok = k >= chars.len() || !chars[k].1.is_lowercase();
        let abbrev = c == '.' && j == i && ends_with_abbreviation(text, pos);
        if next_ok && !abbrev {
            push_trimmed(text, start..end, &mut out);
            start = if k < chars.len() { chars[k].0 } else { text.len() };
        }
        i = j + 1;
    }
    if start < text.len() {
        push_trimmed(text, start..text.len(), &mut out);
    }
    out
}

fn push_trimmed(text: &str, range: Range<usize>, out: &mut Vec<Range<usize>>) {
    let slice = &text[range.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead + trail < slice.len() {
        out.push(range.start + lead..range.end - trail);
    }
}

/// Sentences of `text` as owned strings with internal whitespace normalized.
pub fn split_sentences(text: &str) -> Vec<String> {
    sentence_ranges(text)
        .into_iter()
        .map(|r| normalize_whitespace(&text[r]))
        .collect()
}

/// Convert a byte offset into a char offset.
pub fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

/// Slice `text` by a char range.
pub fn char_slice(text: &str, range: Range<usize>) -> &str {
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let start = indices.nth(range.start).unwrap_or(text.len());
    let end = if range.end > range.start {
        indices.nth(range.end - range.start - 1).unwrap_or(text.len())
    } else {
        start
    };
    &text[start..end]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopwords_sorted_for_binary_search() {
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn tokenize_lowercases_and_drops_stopwords() {
        assert_eq!(tokenize("The Russian troops, in Lyman!"), vec!["russian", "troops", "lyman"]);
    }

    #[test]
    fn splits_on_terminal_punctuation() {
        let s = split_sentences("Drones struck Kyiv. Defenses held! Why now? Unknown.");
        assert_eq!(s, vec!["Drones struck Kyiv.", "Defenses held!", "Why now?", "Unknown."]);
    }

    #[test]
    fn keeps_abbreviations_and_decimals() {
        let s = split_sentences("Dr. Smith met U.S. officials. Output rose 3.5 percent. Gen. Ivanov left.");
        assert_eq!(
            s,
            vec!["Dr. Smith met U.S. officials.", "Output rose 3.5 percent.", "Gen. Ivanov left."]
        );
    }

    #[test]
    fn no_split_before_lowercase() {
        assert_eq!(split_sentences("He said no. and left."), vec!["He said no. and left."]);
    }

    #[test]
    fn closing_quotes_stay_with_sentence() {
        let s = split_sentences("He said \"stop.\" Then he left.");
        assert_eq!(s, vec!["He said \"stop.\"", "Then he left."]);
    }

    #[test]
    fn unterminated_tail_is_a_sentence() {
        assert_eq!(split_sentences("One. Two without end"), vec!["One.", "Two without end"]);
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn char_slicing() {
        let t = "héllo wörld";
        assert_eq!(char_slice(t, 6..11), "wörld");
        assert_eq!(char_slice(t, 0..0), "");
        assert_eq!(char_offset(t, t.find('w').unwrap()), 6);
    }

    #[test]
    fn jaccard_basics() {
        let a = content_terms("drones struck kyiv");
        let b = content_terms("kyiv drones struck");
        assert_eq!(jaccard(&a, &b), 1.0);
        assert_eq!(jaccard(&a, &content_terms("grain exports")), 0.0);
    }
}
