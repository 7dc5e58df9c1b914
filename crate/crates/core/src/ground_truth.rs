//! Benchmark construction from redirect / disambiguation pair records.
//!
//! A pair is kept only if it looks like an abbreviation:
//!
//! - `LEN10`: the short-form has at most ten characters.
//! - `UPPER_HALF`: in cased scripts, at least half of the short-form's
//!   letters are uppercase (digits and punctuation do not count).
//! - `TWICE_LEN_2TOK`: the long-form is at least twice as long as the
//!   short-form, in characters including spaces, and has two or more tokens.
//! - `SUBSTRING`: the lowercased long-form does not contain the lowercased
//!   short-form.
//! - `CHAR80`: at least 80% of the short-form characters, counted with
//!   multiplicity, can each be matched to a distinct long-form character,
//!   ignoring case.
//!
//! Pairs are normalized (see [`LanguageProfile`]) before the rules run, so
//! re-filtering a stored ground truth is a no-op.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::corpus::{CorpusIndex, LanguageProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairSource {
    Redirect,
    Disambiguation,
}

impl PairSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PairSource::Redirect => "redirect",
            PairSource::Disambiguation => "disambig",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "redirect" => Some(PairSource::Redirect),
            "disambig" | "disambiguation" => Some(PairSource::Disambiguation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub short_form: String,
    pub long_form: String,
    pub source: PairSource,
}

impl PairRecord {
    pub fn new(sf: &str, lf: &str, source: PairSource) -> Self {
        Self {
            short_form: sf.to_string(),
            long_form: lf.to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FilterRule {
    Len10,
    UpperHalf,
    TwiceLen2Tok,
    Substring,
    Char80,
}

impl fmt::Display for FilterRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterRule::Len10 => "LEN10",
            FilterRule::UpperHalf => "UPPER_HALF",
            FilterRule::TwiceLen2Tok => "TWICE_LEN_2TOK",
            FilterRule::Substring => "SUBSTRING",
            FilterRule::Char80 => "CHAR80",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FilterVerdict {
    /// Every rule the pair violates, in rule order.
    pub failed_rules: Vec<FilterRule>,
}

impl FilterVerdict {
    pub fn accepted(&self) -> bool {
        self.failed_rules.is_empty()
    }
}

/// Number of short-form characters that can be matched one-to-one to
/// long-form characters, ignoring case.
pub(crate) fn multiset_overlap(sf: &str, lf: &str) -> usize {
    let mut avail: HashMap<char, usize> = HashMap::new();
    for c in lf.chars().flat_map(char::to_lowercase) {
        *avail.entry(c).or_default() += 1;
    }
    let mut matched = 0;
    for c in sf.chars().flat_map(char::to_lowercase) {
        if let Some(n) = avail.get_mut(&c).filter(|n| **n > 0) {
            *n -= 1;
            matched += 1;
        }
    }
    matched
}

/// Applies all five rules to an already-normalized pair.
pub fn check_pair(sf: &str, lf: &str, profile: &LanguageProfile) -> FilterVerdict {
    let mut failed = Vec::new();
    let sf_len = sf.chars().count();
    let lf_len = lf.chars().count();

    if sf_len > 10 {
        failed.push(FilterRule::Len10);
    }
    if profile.case_sensitive() && !upper_half(sf) {
        failed.push(FilterRule::UpperHalf);
    }
    if lf_len < 2 * sf_len || profile.long_form_tokens(lf).len() < 2 {
        failed.push(FilterRule::TwiceLen2Tok);
    }
    if lf.to_lowercase().contains(&sf.to_lowercase()) {
        failed.push(FilterRule::Substring);
    }
    let sf_lower_len = sf.chars().flat_map(char::to_lowercase).count();
    if 5 * multiset_overlap(sf, lf) < 4 * sf_lower_len {
        failed.push(FilterRule::Char80);
    }
    FilterVerdict {
        failed_rules: failed,
    }
}

/// At least ⌈letters / 2⌉ uppercase letters.
pub(crate) fn upper_half(sf: &str) -> bool {
    let letters = sf.chars().filter(|c| c.is_alphabetic()).count();
    let upper = sf.chars().filter(|c| c.is_uppercase()).count();
    upper >= letters.div_ceil(2)
}

/// Normalizes the record per `profile` and applies the rules.
pub fn filter_pair(rec: &PairRecord, profile: &LanguageProfile) -> FilterVerdict {
    check_pair(
        &profile.normalize_short_form(&rec.short_form),
        &profile.normalize_long_form(&rec.long_form),
        profile,
    )
}

/// Counts reported by [`build_ground_truth`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub records: usize,
    pub accepted_redirect: usize,
    pub accepted_disambiguation: usize,
    pub rejected: usize,
    pub malformed: usize,
}

/// Filtered mapping from short-form to its long-forms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    entries: BTreeMap<String, BTreeMap<String, PairSource>>,
}

impl GroundTruth {
    /// Inserts a normalized pair; disambiguation provenance wins over redirect.
    pub fn insert(&mut self, sf: String, lf: String, source: PairSource) {
        let slot = self.entries.entry(sf).or_default().entry(lf).or_insert(source);
        *slot = (*slot).max(source);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_short_forms(&self) -> usize {
        self.entries.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn contains_short_form(&self, sf: &str) -> bool {
        self.entries.contains_key(sf)
    }

    pub fn contains(&self, sf: &str, lf: &str) -> bool {
        self.entries.get(sf).is_some_and(|m| m.contains_key(lf))
    }

    pub fn source(&self, sf: &str, lf: &str) -> Option<PairSource> {
        self.entries.get(sf).and_then(|m| m.get(lf)).copied()
    }

    pub fn short_forms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn long_forms(&self, sf: &str) -> impl Iterator<Item = &str> {
        self.entries
            .get(sf)
            .into_iter()
            .flat_map(|m| m.keys().map(String::as_str))
    }

    /// `(short_form, long_form, source)` in sorted order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, PairSource)> {
        self.entries
            .iter()
            .flat_map(|(sf, m)| m.iter().map(move |(lf, s)| (sf.as_str(), lf.as_str(), *s)))
    }

    /// Sub-benchmark restricted to the given short-forms.
    pub fn restrict_to_short_forms(&self, keep: &BTreeSet<String>) -> GroundTruth {
        GroundTruth {
            entries: self
                .entries
                .iter()
                .filter(|(sf, _)| keep.contains(*sf))
                .map(|(sf, m)| (sf.clone(), m.clone()))
                .collect(),
        }
    }

    /// Writes `short_form<TAB>long_form<TAB>source` lines in sorted order,
    /// after any `#` comment header lines.
    pub fn write_tsv<W: Write>(&self, mut w: W, header: &[String]) -> std::io::Result<()> {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        for (sf, lf, src) in self.pairs() {
            writeln!(w, "{sf}\t{lf}\t{}", src.as_str())?;
        }
        Ok(())
    }

    /// Reads a stored ground truth. Pairs are taken as already normalized
    /// and filtered.
    pub fn read_tsv(path: &Path) -> Result<GroundTruth> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut gt = GroundTruth::default();
        for (n, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let rec = parse_record_line(line)
                .ok_or_else(|| Error::parse(path.display().to_string(), n + 1, "bad pair line"))?;
            gt.insert(rec.short_form, rec.long_form, rec.source);
        }
        Ok(gt)
    }
}

fn parse_record_line(line: &str) -> Option<PairRecord> {
    let mut cols = line.split('\t');
    let (sf, lf, src) = (cols.next()?, cols.next()?, cols.next()?);
    if cols.next().is_some() || sf.trim().is_empty() || lf.trim().is_empty() {
        return None;
    }
    Some(PairRecord::new(sf, lf, PairSource::parse(src.trim())?))
}

/// Parses pair-record TSV text. Malformed lines are counted, not fatal.
pub fn parse_pair_records(text: &str) -> (Vec<PairRecord>, usize) {
    let mut records = Vec::new();
    let mut malformed = 0;
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        match parse_record_line(line) {
            Some(r) => records.push(r),
            None => malformed += 1,
        }
    }
    (records, malformed)
}

pub fn build_ground_truth<I>(records: I, profile: &LanguageProfile) -> (GroundTruth, BuildStats)
where
    I: IntoIterator<Item = PairRecord>,
{
    let mut gt = GroundTruth::default();
    let mut stats = BuildStats::default();
    for rec in records {
        stats.records += 1;
        let sf = profile.normalize_short_form(&rec.short_form);
        let lf = profile.normalize_long_form(&rec.long_form);
        if sf.is_empty() || lf.is_empty() {
            stats.malformed += 1;
            continue;
        }
        if !check_pair(&sf, &lf, profile).accepted() {
            stats.rejected += 1;
            continue;
        }
        match rec.source {
            PairSource::Redirect => stats.accepted_redirect += 1,
            PairSource::Disambiguation => stats.accepted_disambiguation += 1,
        }
        gt.insert(sf, lf, rec.source);
    }
    (gt, stats)
}

/// Keeps only pairs whose forms share at least one document.
pub fn restrict_to_cooccurring(
    gt: &GroundTruth,
    index: &CorpusIndex,
    profile: &LanguageProfile,
) -> GroundTruth {
    let mut out = GroundTruth::default();
    for (sf, lf, src) in gt.pairs() {
        let tokens = profile.long_form_tokens(lf);
        if index.pair_counts(sf, &tokens).cooc >= 1 {
            out.insert(sf.to_string(), lf.to_string(), src);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;
    use FilterRule::*;

    fn en() -> LanguageProfile {
        LanguageProfile::english()
    }

    fn verdict(sf: &str, lf: &str) -> FilterVerdict {
        filter_pair(&PairRecord::new(sf, lf, PairSource::Redirect), &en())
    }

    #[test]
    fn cited_examples() {
        assert!(verdict("URL", "Uniform Resource Locator").accepted());
        let ca = verdict("CA", "California");
        assert!(!ca.accepted());
        assert!(ca.failed_rules.contains(&Substring));
        assert!(verdict("ABCDEFGHIJK", "any long form here")
            .failed_rules
            .contains(&Len10));
        assert!(verdict("EDT", "Eastern Daylight Time").accepted());
    }

    #[test]
    fn alphanumeric_short_forms() {
        assert!(verdict("B2B", "Business 2 Business").accepted());
        assert_eq!(verdict("B2B", "Business to Business").failed_rules, [Char80]);
        assert_eq!(verdict("Abc", "Alpha Bravo Charlie").failed_rules, [UpperHalf]);
        assert!(verdict("ABc", "Alpha Bravo Charlie").accepted());
    }

    #[test]
    fn char80_counts_multiplicity() {
        // A single 'a' cannot cover three.
        assert!(verdict("AAA", "Alpha Team Zone").failed_rules.is_empty());
        assert!(verdict("AAA", "Big Lot Zone").failed_rules.contains(&Char80));
        assert!(verdict("AAAA", "Xa Yb Zc").failed_rules.contains(&Char80));
    }

    #[test]
    fn build_merges_sources() {
        let recs = vec![
            PairRecord::new("URL", "Uniform Resource Locator", PairSource::Redirect),
            PairRecord::new("URL", "Unrestricted Line Officer", PairSource::Disambiguation),
            PairRecord::new("URL", "Uniform Resource Locator", PairSource::Disambiguation),
            PairRecord::new("CA", "California", PairSource::Redirect),
        ];
        let (gt, stats) = build_ground_truth(recs, &en());
        assert_eq!(gt.num_short_forms(), 1);
        assert_eq!(gt.num_pairs(), 2);
        assert_eq!(
            gt.source("URL", "uniform resource locator"),
            Some(PairSource::Disambiguation)
        );
        assert_eq!(stats.rejected, 1);
        assert_eq!(stats.accepted_redirect, 1);
        assert_eq!(stats.accepted_disambiguation, 2);
    }

    #[test]
    fn empty_stream() {
        let (gt, stats) = build_ground_truth(Vec::new(), &en());
        assert!(gt.is_empty());
        assert_eq!(stats, BuildStats::default());
    }

    #[test]
    fn malformed_lines_are_counted() {
        let text = "URL\tUniform Resource Locator\tredirect\nbroken line\nX\tY\tunknown\n\n# c\n";
        let (recs, bad) = parse_pair_records(text);
        assert_eq!(recs.len(), 1);
        assert_eq!(bad, 2);
    }

    #[test]
    fn restrict_keeps_reachable_long_form() {
        let corpus = Corpus::from_texts(
            en(),
            [
                ("d0", "The Eastern Daylight Time (EDT) applies."),
                ("d1", "EDT is mentioned alone. Energy Dept Tariff elsewhere?"),
            ],
        );
        let index = CorpusIndex::build(&corpus);
        let (gt, _) = build_ground_truth(
            vec![
                PairRecord::new("EDT", "Eastern Daylight Time", PairSource::Redirect),
                PairRecord::new("EDT", "Electronic Data Transfer", PairSource::Disambiguation),
            ],
            &en(),
        );
        let r = restrict_to_cooccurring(&gt, &index, &en());
        assert_eq!(r.long_forms("EDT").collect::<Vec<_>>(), ["eastern daylight time"]);
    }

    #[test]
    fn tsv_is_sorted() {
        let (gt, _) = build_ground_truth(
            vec![
                PairRecord::new("URL", "Unrestricted Line Officer", PairSource::Disambiguation),
                PairRecord::new("EDT", "Eastern Daylight Time", PairSource::Redirect),
                PairRecord::new("URL", "Uniform Resource Locator", PairSource::Redirect),
            ],
            &en(),
        );
        let mut buf = Vec::new();
        gt.write_tsv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "EDT\teastern daylight time\tredirect\n\
             URL\tuniform resource locator\tredirect\n\
             URL\tunrestricted line officer\tdisambig\n"
        );
    }
}
