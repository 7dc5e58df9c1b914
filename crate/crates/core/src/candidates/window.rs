//! Window-based candidate system.
//!
//! For each short-form-shaped token, every contiguous run of 2 to 8 word
//! tokens lying within `window` tokens of one of its occurrences becomes a
//! candidate if it starts with the short-form's first letter and covers at
//! least 80% of its characters. Candidates are scored
//!
//! ```text
//! score = ln(1 + cooc) · charsim / (1 + min_dist / window)
//! ```
//!
//! where `charsim` is the longest in-order character match divided by the
//! short-form length, and kept when `score >= threshold`.

use std::collections::BTreeSet;

use super::{qualifies_short_form, ScoredCandidate};
use crate::corpus::{is_structural, Corpus, CorpusIndex};
use crate::ground_truth::multiset_overlap;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowConfig {
    pub window: usize,
    pub threshold: f64,
    pub min_ngram: usize,
    pub max_ngram: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window: 20,
            threshold: 0.25,
            min_ngram: 2,
            max_ngram: 8,
        }
    }
}

/// Longest common subsequence of the lowercased forms over `|sf|`.
pub fn char_similarity(sf: &str, lf: &str) -> f64 {
    let a: Vec<char> = sf.chars().flat_map(char::to_lowercase).collect();
    let b: Vec<char> = lf
        .chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    if a.is_empty() {
        return 0.0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &x in &a {
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as f64 / a.len() as f64
}

pub fn window_score(cooc: u64, min_dist: Option<u32>, charsim: f64, window: usize) -> f64 {
    let Some(d) = min_dist else {
        return 0.0;
    };
    (cooc as f64).ln_1p() * charsim / (1.0 + d as f64 / window as f64)
}

fn first_char_lower(s: &str) -> Option<char> {
    s.chars().next().and_then(|c| c.to_lowercase().next())
}

pub fn extract_window_candidates(
    corpus: &Corpus,
    index: &CorpusIndex,
    cfg: &WindowConfig,
) -> Vec<ScoredCandidate> {
    let profile = &corpus.profile;
    let mut out = Vec::new();
    let mut seen_sf = BTreeSet::new();
    for term in index.terms() {
        if !qualifies_short_form(term, profile) {
            continue;
        }
        let sf = profile.normalize_short_form(term);
        if !seen_sf.insert(sf.clone()) {
            continue;
        }
        let Some(first) = first_char_lower(&sf) else {
            continue;
        };
        let sf_len = sf.chars().flat_map(char::to_lowercase).count();

        let mut grams: BTreeSet<Vec<String>> = BTreeSet::new();
        for (doc, positions) in index.positions(&sf) {
            let toks = corpus.documents[doc as usize].tokens.as_slice();
            for &pos in positions {
                let pos = pos as usize;
                let lo = pos.saturating_sub(cfg.window);
                let hi = (pos + cfg.window).min(toks.len() - 1);
                for start in lo..=hi {
                    if start == pos || first_char_lower(&toks[start].surface) != Some(first) {
                        continue;
                    }
                    for n in cfg.min_ngram..=cfg.max_ngram {
                        let end = start + n;
                        if end > hi + 1 || (start..end).contains(&pos) {
                            break;
                        }
                        let run = &toks[start..end];
                        if run
                            .iter()
                            .any(|t| is_structural(&t.surface) || t.surface == *term)
                        {
                            break;
                        }
                        let lf: Vec<String> =
                            run.iter().map(|t| t.surface.to_lowercase()).collect();
                        let joined = profile.join_tokens(&lf);
                        if 5 * multiset_overlap(&sf, &joined) >= 4 * sf_len {
                            grams.insert(lf);
                        }
                    }
                }
            }
        }

        for lf in grams {
            let counts = index.pair_counts(&sf, &lf);
            let joined = profile.join_tokens(&lf);
            let score = window_score(
                counts.cooc,
                counts.min_dist,
                char_similarity(&sf, &joined),
                cfg.window,
            );
            if score >= cfg.threshold {
                out.push(ScoredCandidate {
                    short_form: sf.clone(),
                    long_form: joined,
                    sh_score: 0,
                    cs2_score: Some(score),
                });
            }
        }
    }
    out
}
