//! Candidate generation.
//!
//! Two independent systems propose pairs: the parenthetical extractor
//! ([`extract_parenthetical`]) and the window-based co-occurrence system
//! ([`extract_window_candidates`]). [`aggregate`] merges both into one record
//! per unique pair.

mod parenthetical;
mod window;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub use parenthetical::{best_long_form, extract_parenthetical};
pub use window::{char_similarity, extract_window_candidates, window_score, WindowConfig};

use crate::corpus::{is_structural, LanguageProfile, Span};
use crate::ground_truth::upper_half;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CandidateSource {
    /// Parenthetical pattern.
    SchwartzHearst,
    /// Window co-occurrence system.
    Window,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateOccurrence {
    pub doc_id: String,
    pub short_form: String,
    pub long_form: Vec<String>,
    pub source: CandidateSource,
    pub sentence: Span,
}

/// One unique pair with the scores of the systems that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub short_form: String,
    pub long_form: String,
    /// Parenthetical occurrence count, 0 when never extracted that way.
    pub sh_score: u32,
    pub cs2_score: Option<f64>,
}

/// Token shape required of a short-form: 2 to 10 characters, at least one
/// letter, and in cased scripts at least half of the letters uppercase.
pub fn qualifies_short_form(token: &str, profile: &LanguageProfile) -> bool {
    let n = token.chars().count();
    if !(2..=10).contains(&n) || is_structural(token) {
        return false;
    }
    if !token.chars().any(char::is_alphabetic) {
        return false;
    }
    !profile.case_sensitive() || upper_half(token)
}

/// Merges parenthetical occurrences and window candidates on the
/// normalized `(short_form, long_form)` key. Output is sorted by key.
pub fn aggregate<I>(
    occurrences: I,
    window: Vec<ScoredCandidate>,
    profile: &LanguageProfile,
) -> Vec<ScoredCandidate>
where
    I: IntoIterator<Item = CandidateOccurrence>,
{
    let mut merged: BTreeMap<(String, String), ScoredCandidate> = BTreeMap::new();
    for occ in occurrences {
        let key = (
            profile.normalize_short_form(&occ.short_form),
            profile.join_tokens(&occ.long_form),
        );
        merged
            .entry(key.clone())
            .or_insert_with(|| ScoredCandidate {
                short_form: key.0,
                long_form: key.1,
                sh_score: 0,
                cs2_score: None,
            })
            .sh_score += 1;
    }
    for cand in window {
        let key = (
            profile.normalize_short_form(&cand.short_form),
            profile.normalize_long_form(&cand.long_form),
        );
        let entry = merged.entry(key.clone()).or_insert_with(|| ScoredCandidate {
            short_form: key.0,
            long_form: key.1,
            sh_score: 0,
            cs2_score: None,
        });
        entry.sh_score += cand.sh_score;
        entry.cs2_score = match (entry.cs2_score, cand.cs2_score) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }
    merged.into_values().collect()
}

/// Writes `short_form<TAB>long_form<TAB>sh_score<TAB>cs2_score`, with an
/// empty last field when the window system did not produce the pair.
pub fn write_candidates<W: Write>(
    mut w: W,
    cands: &[ScoredCandidate],
    header: &[String],
) -> std::io::Result<()> {
    for h in header {
        writeln!(w, "# {h}")?;
    }
    for c in cands {
        let cs2 = c
            .cs2_score
            .map(|s| crate::util::fmt_sig(s, 9))
            .unwrap_or_default();
        writeln!(w, "{}\t{}\t{}\t{}", c.short_form, c.long_form, c.sh_score, cs2)?;
    }
    Ok(())
}

pub fn read_candidates(path: &Path) -> Result<Vec<ScoredCandidate>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |n: usize, m: &str| Error::parse(path.display().to_string(), n + 1, m);
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(bad(n, "expected 4 columns"));
        }
        let sh_score = cols[2].parse().map_err(|_| bad(n, "bad sh_score"))?;
        let cs2_score = match cols[3] {
            "" => None,
            s => Some(s.parse().map_err(|_| bad(n, "bad cs2_score"))?),
        };
        out.push(ScoredCandidate {
            short_form: cols[0].to_string(),
            long_form: cols[1].to_string(),
            sh_score,
            cs2_score,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ(sf: &str, lf: &str) -> CandidateOccurrence {
        CandidateOccurrence {
            doc_id: "d".into(),
            short_form: sf.into(),
            long_form: lf.split(' ').map(String::from).collect(),
            source: CandidateSource::SchwartzHearst,
            sentence: Span { start: 0, end: 1 },
        }
    }

    fn cs2(sf: &str, lf: &str, s: f64) -> ScoredCandidate {
        ScoredCandidate {
            short_form: sf.into(),
            long_form: lf.into(),
            sh_score: 0,
            cs2_score: Some(s),
        }
    }

    #[test]
    fn qualification() {
        let en = LanguageProfile::english();
        assert!(qualifies_short_form("EDT", &en));
        assert!(qualifies_short_form("B2B", &en));
        assert!(!qualifies_short_form("12", &en));
        assert!(!qualifies_short_form("edt", &en));
        assert!(!qualifies_short_form("The", &en));
        assert!(!qualifies_short_form("E", &en));
        assert!(!qualifies_short_form("ABCDEFGHIJK", &en));
        let ja = LanguageProfile::for_code("ja").unwrap();
        assert!(qualifies_short_form("nhk", &ja));
    }

    #[test]
    fn counts_identical_occurrences() {
        let en = LanguageProfile::english();
        let out = aggregate((0..20).map(|_| occ("EDT", "Eastern Daylight Time")), vec![], &en);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].sh_score, 20);
        assert_eq!(out[0].long_form, "eastern daylight time");
        assert_eq!(out[0].cs2_score, None);
    }

    #[test]
    fn window_only_and_merged() {
        let en = LanguageProfile::english();
        let out = aggregate(
            vec![occ("EDT", "Eastern Daylight Time")],
            vec![cs2("EDT", "eastern daylight time", 1.5), cs2("URL", "uniform resource locator", 0.7)],
            &en,
        );
        assert_eq!(out.len(), 2);
        assert_eq!((out[0].sh_score, out[0].cs2_score), (1, Some(1.5)));
        assert_eq!((out[1].sh_score, out[1].cs2_score), (0, Some(0.7)));
    }

    #[test]
    fn tsv_round_trip() {
        let cands = vec![
            ScoredCandidate {
                short_form: "EDT".into(),
                long_form: "eastern daylight time".into(),
                sh_score: 3,
                cs2_score: None,
            },
            cs2("URL", "uniform resource locator", 0.125),
        ];
        let tmp = tempfile::NamedTempFile::new().unwrap();
        write_candidates(std::fs::File::create(tmp.path()).unwrap(), &cands, &["h".into()])
            .unwrap();
        let text = std::fs::read_to_string(tmp.path()).unwrap();
        assert_eq!(
            text,
            "# h\nEDT\teastern daylight time\t3\t\nURL\tuniform resource locator\t0\t0.125\n"
        );
        assert_eq!(read_candidates(tmp.path()).unwrap(), cands);
    }
}
