//! Seeded synthetic corpus with planted abbreviations.
//!
//! Each planted short-form gets one to three expansions built from
//! pseudo-words whose initials spell it, and each expansion its own topic
//! vocabulary. Documents mix parenthetical definitions, bare mentions,
//! long-form mentions, decoy phrases near the short-form, and noise drawn
//! from other topics. Pair records list every planted pair plus records
//! that fail the filters or never co-occur with their short-form.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::LanguageProfile;
use crate::ground_truth::check_pair;

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const FILLER: &[&str] = &[
    "the", "of", "and", "in", "a", "is", "was", "with", "for", "by", "on", "as", "from", "that",
    "which", "its", "an", "to", "at", "were",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_abbrevs: usize,
    pub n_docs: usize,
    pub max_expansions: usize,
    pub topic_words: usize,
    pub mentions_per_doc: usize,
    /// Chance that a document carries a parenthetical definition.
    pub definition_rate: f64,
    /// Chance of each decoy sentence kind per document.
    pub decoy_rate: f64,
    /// Chance that a decoy phrase is itself written as a parenthetical
    /// definition.
    pub misuse_rate: f64,
    pub noise_sentences: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_abbrevs: 50,
            n_docs: 500,
            max_expansions: 3,
            topic_words: 12,
            mentions_per_doc: 3,
            definition_rate: 0.4,
            decoy_rate: 0.7,
            misuse_rate: 0.35,
            noise_sentences: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFixture {
    /// One `{"id", "text"}` object per line.
    pub corpus_jsonl: String,
    /// `short_form<TAB>long_form<TAB>redirect|disambig`
    pub pair_records: String,
    /// Planted `(short_form, long_form)` pairs, long-forms lowercase.
    pub planted: Vec<(String, String)>,
}

struct Words {
    used: HashSet<String>,
}

impl Words {
    fn new() -> Self {
        Self {
            used: FILLER.iter().map(|w| w.to_string()).collect(),
        }
    }

    fn syllable(rng: &mut ChaCha8Rng, out: &mut String) {
        out.push(*CONSONANTS.choose(rng).expect("non-empty") as char);
        out.push(*VOWELS.choose(rng).expect("non-empty") as char);
    }

    /// Fresh pseudo-word, starting with `first` when given.
    fn fresh(&mut self, rng: &mut ChaCha8Rng, first: Option<char>) -> String {
        loop {
            let mut w = String::new();
            if let Some(c) = first {
                w.push(c);
                if !VOWELS.contains(&(c as u8)) {
                    w.push(*VOWELS.choose(rng).expect("non-empty") as char);
                }
            }
            for _ in 0..rng.random_range(1..=2) {
                Self::syllable(rng, &mut w);
            }
            if w.len() >= 3 && self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    /// Fresh pseudo-word holding `inner` after a non-matching start.
    fn hiding(&mut self, rng: &mut ChaCha8Rng, inner: char) -> String {
        loop {
            let mut w = String::new();
            Self::syllable(rng, &mut w);
            w.push(inner);
            w.push(*VOWELS.choose(rng).expect("non-empty") as char);
            if !w.starts_with(inner) && self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

struct Expansion {
    long_form: Vec<String>,
    topic: Vec<String>,
}

struct Planted {
    short_form: String,
    expansions: Vec<Expansion>,
    /// Same initials, not a listed expansion.
    initial_decoy: Vec<String>,
    /// Starts with the first letter; the others hide inside words.
    letter_decoy: Vec<String>,
}

fn short_forms(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.random_range(2..=4);
        let mut letters: Vec<u8> = (b'A'..=b'Z').collect();
        letters.shuffle(rng);
        let sf: String = letters[..len].iter().map(|&b| b as char).collect();
        if seen.insert(sf.clone()) {
            out.push(sf);
        }
    }
    out
}

fn plant(rng: &mut ChaCha8Rng, words: &mut Words, sf: String, cfg: &SyntheticConfig, profile: &LanguageProfile) -> Planted {
    let letters: Vec<char> = sf.to_lowercase().chars().collect();
    let n_exp = rng.random_range(1..=cfg.max_expansions.max(1));
    let mut expansions = Vec::with_capacity(n_exp);
    while expansions.len() < n_exp {
        let long_form: Vec<String> = letters.iter().map(|&c| words.fresh(rng, Some(c))).collect();
        if !check_pair(&sf, &long_form.join(" "), profile).accepted() {
            continue;
        }
        let topic = (0..cfg.topic_words).map(|_| words.fresh(rng, None)).collect();
        expansions.push(Expansion { long_form, topic });
    }
    let initial_decoy = letters.iter().map(|&c| words.fresh(rng, Some(c))).collect();
    let mut letter_decoy = vec![words.fresh(rng, Some(letters[0]))];
    letter_decoy.extend(letters[1..].iter().map(|&c| words.hiding(rng, c)));
    Planted {
        short_form: sf,
        expansions,
        initial_decoy,
        letter_decoy,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &'a [String]) -> &'a str {
    pool.choose(rng).expect("non-empty pool")
}

fn filler(rng: &mut ChaCha8Rng) -> &'static str {
    FILLER.choose(rng).expect("non-empty")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn sentence(parts: Vec<String>) -> String {
    let mut s = capitalize(&parts.join(" "));
    s.push('.');
    s
}

#[allow(clippy::too_many_arguments)]
fn document(
    rng: &mut ChaCha8Rng,
    p: &Planted,
    e: &Expansion,
    define: bool,
    noise_topics: &[&[String]],
    cfg: &SyntheticConfig,
) -> String {
    let sf = &p.short_form;
    let lf = e.long_form.join(" ");
    let topic = |rng: &mut ChaCha8Rng| pick(rng, &e.topic).to_string();
    let mut sentences = Vec::new();
    if define {
        sentences.push(sentence(vec![
            "the".into(),
            lf.clone(),
            format!("({sf})"),
            filler(rng).into(),
            topic(rng),
            topic(rng),
            filler(rng).into(),
            topic(rng),
        ]));
    }
    for _ in 0..cfg.mentions_per_doc {
        sentences.push(sentence(vec![
            topic(rng),
            filler(rng).into(),
            sf.clone(),
            filler(rng).into(),
            topic(rng),
            filler(rng).into(),
            topic(rng),
        ]));
    }
    sentences.push(sentence(vec![
        topic(rng),
        filler(rng).into(),
        lf.clone(),
        filler(rng).into(),
        topic(rng),
    ]));
    let noise = |rng: &mut ChaCha8Rng| {
        let pool = noise_topics.choose(rng).expect("noise pool");
        pick(rng, pool).to_string()
    };
    if rng.random_bool(cfg.decoy_rate) {
        let decoy = p.initial_decoy.join(" ");
        if rng.random_bool(cfg.misuse_rate) {
            sentences.push(sentence(vec![noise(rng), "the".into(), decoy, format!("({sf})"), noise(rng)]));
        } else {
            sentences.push(sentence(vec![noise(rng), decoy, filler(rng).into(), sf.clone(), noise(rng)]));
        }
    }
    if rng.random_bool(cfg.decoy_rate) {
        sentences.push(sentence(vec![
            topic(rng),
            p.letter_decoy.join(" "),
            filler(rng).into(),
            sf.clone(),
            topic(rng),
        ]));
    }
    for _ in 0..cfg.noise_sentences {
        let mut parts = Vec::new();
        for _ in 0..6 {
            parts.push(noise(rng));
            if rng.random_bool(0.5) {
                parts.push(filler(rng).into());
            }
        }
        sentences.push(sentence(parts));
    }
    // Keep the definition first; shuffle the rest for variety.
    let start = usize::from(define);
    sentences[start..].shuffle(rng);
    sentences.join(" ")
}

/// Builds the fixture. Output is a pure function of `seed` and `cfg`.
pub fn generate_synthetic_fixture(seed: u64, cfg: &SyntheticConfig) -> SyntheticFixture {
    let profile = LanguageProfile::english();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = Words::new();
    let planted: Vec<Planted> = short_forms(&mut rng, cfg.n_abbrevs)
        .into_iter()
        .map(|sf| plant(&mut rng, &mut words, sf, cfg, &profile))
        .collect();

    // Documents per short-form, dealt round-robin over its expansions.
    let n = planted.len().max(1);
    let mut jobs: Vec<(usize, usize, bool)> = Vec::new();
    for (i, p) in planted.iter().enumerate() {
        let count = cfg.n_docs / n + usize::from(i < cfg.n_docs % n);
        let count = count.max(p.expansions.len());
        for d in 0..count {
            let e = d % p.expansions.len();
            let define = rng.random_bool(cfg.definition_rate);
            jobs.push((i, e, define));
        }
    }
    jobs.shuffle(&mut rng);

    let mut corpus_jsonl = String::new();
    for (k, &(i, e, define)) in jobs.iter().enumerate() {
        let noise_topics: Vec<&[String]> = planted
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, p)| p.expansions.iter().map(|x| x.topic.as_slice()))
            .collect();
        let text = document(&mut rng, &planted[i], &planted[i].expansions[e], define, &noise_topics, cfg);
        let line = serde_json::json!({ "id": format!("doc{k:04}"), "text": text });
        writeln!(corpus_jsonl, "{line}").expect("write to string");
    }

    let mut pair_records = String::new();
    let mut planted_pairs = Vec::new();
    for p in &planted {
        let source = if p.expansions.len() > 1 { "disambig" } else { "redirect" };
        for e in &p.expansions {
            let lf = e.long_form.join(" ");
            let shown: Vec<String> = e.long_form.iter().map(|w| capitalize(w)).collect();
            writeln!(pair_records, "{}\t{}\t{source}", p.short_form, shown.join(" ")).expect("write");
            planted_pairs.push((p.short_form.clone(), lf));
        }
    }
    // Records the benchmark must drop: filter failures, then pairs that
    // never share a document with their short-form.
    for p in planted.iter().take(5) {
        let single = p.expansions[0].long_form.concat();
        writeln!(pair_records, "{}\t{}\tredirect", p.short_form, capitalize(&single)).expect("write");
        writeln!(pair_records, "{}\t{} x\tredirect", p.short_form.to_lowercase(), p.short_form).expect("write");
    }
    for p in planted.iter().rev().take(5) {
        let unseen: Vec<String> = p
            .short_form
            .to_lowercase()
            .chars()
            .map(|c| capitalize(&words.fresh(&mut rng, Some(c))))
            .collect();
        writeln!(pair_records, "{}\t{}\tdisambig", p.short_form, unseen.join(" ")).expect("write");
    }

    SyntheticFixture {
        corpus_jsonl,
        pair_records,
        planted: planted_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_jsonl, CorpusIndex};
    use crate::ground_truth::{build_ground_truth, parse_pair_records, restrict_to_cooccurring, PairRecord, PairSource};

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            n_abbrevs: 12,
            n_docs: 60,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate_synthetic_fixture(3, &small()), generate_synthetic_fixture(3, &small()));
        assert_ne!(
            generate_synthetic_fixture(3, &small()).corpus_jsonl,
            generate_synthetic_fixture(4, &small()).corpus_jsonl
        );
    }

    #[test]
    fn planted_pairs_survive_the_benchmark() {
        let fx = generate_synthetic_fixture(5, &small());
        let profile = LanguageProfile::english();
        for (sf, lf) in &fx.planted {
            let rec = PairRecord::new(sf, lf, PairSource::Redirect);
            assert!(crate::ground_truth::filter_pair(&rec, &profile).accepted(), "{sf} {lf}");
        }
        let (records, malformed) = parse_pair_records(&fx.pair_records);
        assert_eq!(malformed, 0);
        let (gt, stats) = build_ground_truth(records, &profile);
        assert_eq!(stats.rejected, 10);
        let corpus = parse_jsonl(&fx.corpus_jsonl, "fixture", &profile).unwrap();
        assert_eq!(corpus.len(), 60);
        let restricted = restrict_to_cooccurring(&gt, &CorpusIndex::build(&corpus), &profile);
        assert_eq!(restricted.num_pairs(), fx.planted.len());
        for (sf, lf) in &fx.planted {
            assert!(restricted.contains(sf, lf));
        }
    }
}
