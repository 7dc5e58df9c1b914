//! Parenthetical pattern extractor.
//!
//! Handles `long form (SF)` and `SF (long form)`. The long-form search looks
//! back at most `min(|SF| + 5, 2·|SF|)` tokens within the sentence, never
//! across another parenthesis or terminator, and picks the shortest window
//! whose first token starts with the short-form's first character and which
//! contains every short-form character in order.

use super::{qualifies_short_form, CandidateOccurrence, CandidateSource};
use crate::corpus::{is_close_paren, is_open_paren, is_structural, Document, LanguageProfile};

fn sf_chars(sf: &str) -> Vec<char> {
    sf.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

fn max_window(sf: &str) -> usize {
    let n = sf.chars().count();
    (n + 5).min(2 * n)
}

/// Whether `window` starts with the first short-form character and holds
/// the remaining ones in order.
fn window_matches<S: AsRef<str>>(chars: &[char], window: &[S]) -> bool {
    let Some((&first, rest)) = chars.split_first() else {
        return false;
    };
    let Some(head) = window.first() else {
        return false;
    };
    let mut text = window
        .iter()
        .flat_map(|t| t.as_ref().chars().flat_map(char::to_lowercase));
    if text.next() != Some(first) || head.as_ref().is_empty() {
        return false;
    }
    rest.iter().all(|c| text.any(|t| t == *c))
}

/// Shortest suffix of `preceding` that can expand `sf`, or `None`.
pub fn best_long_form<S: AsRef<str>>(sf: &str, preceding: &[S]) -> Option<Vec<String>> {
    let chars = sf_chars(sf);
    if chars.is_empty() {
        return None;
    }
    let limit = max_window(sf).min(preceding.len());
    (1..=limit)
        .map(|k| &preceding[preceding.len() - k..])
        .find(|w| window_matches(&chars, w))
        .map(|w| w.iter().map(|t| t.as_ref().to_string()).collect())
}

pub fn extract_parenthetical(doc: &Document, profile: &LanguageProfile) -> Vec<CandidateOccurrence> {
    let mut out = Vec::new();
    for &span in &doc.sentences {
        let toks: Vec<&str> = doc
            .sentence_tokens(span)
            .iter()
            .map(|t| t.surface.as_str())
            .collect();
        for open in 0..toks.len() {
            if !is_open_paren(toks[open]) {
                continue;
            }
            let Some(close) = matching_close(&toks, open) else {
                continue;
            };
            let inner = &toks[open + 1..close];
            let found = if inner.len() == 1 && qualifies_short_form(inner[0], profile) {
                let start = toks[..open]
                    .iter()
                    .rposition(|t| is_structural(t))
                    .map_or(0, |p| p + 1);
                best_long_form(inner[0], &toks[start..open]).map(|lf| (inner[0], lf))
            } else if inner.len() >= 2 && open > 0 {
                reverse_pattern(toks[open - 1], inner, profile)
            } else {
                None
            };
            if let Some((sf, lf)) = found {
                out.push(CandidateOccurrence {
                    doc_id: doc.doc_id.clone(),
                    short_form: sf.to_string(),
                    long_form: lf,
                    source: CandidateSource::SchwartzHearst,
                    sentence: span,
                });
            }
        }
    }
    out
}

fn matching_close(toks: &[&str], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in toks.iter().enumerate().skip(open) {
        if is_open_paren(t) {
            depth += 1;
        } else if is_close_paren(t) {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// `SF (long form)`: the whole parenthesized run must be a valid expansion.
fn reverse_pattern<'a>(
    sf: &'a str,
    inner: &[&str],
    profile: &LanguageProfile,
) -> Option<(&'a str, Vec<String>)> {
    if is_structural(sf) || !qualifies_short_form(sf, profile) {
        return None;
    }
    if inner.iter().any(|t| is_structural(t)) || inner.len() > max_window(sf) {
        return None;
    }
    window_matches(&sf_chars(sf), inner)
        .then(|| (sf, inner.iter().map(|t| t.to_string()).collect()))
}
