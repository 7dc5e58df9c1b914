//! Manual review of measured false positives.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ground_truth::GroundTruth;
use crate::scorer::ScoredPair;
use crate::util::fmt_sig;
use crate::{Error, Result};

const SHEET_HEADER: &str = "bin\tshort_form\tlong_form\tscore\tverdict";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Correct,
    Incorrect,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Correct => "correct",
            Self::Incorrect => "incorrect",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub bin: usize,
    pub short_form: String,
    pub long_form: String,
    pub score: f64,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSheet {
    pub rows: Vec<SampleRow>,
}

/// `ter = (1 - pseudo_precision) · incorrect / (correct + incorrect)`
pub fn true_error_rate(pseudo_precision: f64, correct: usize, incorrect: usize) -> Result<f64> {
    if correct + incorrect == 0 {
        return Err(Error::EmptySample);
    }
    Ok((1.0 - pseudo_precision) * incorrect as f64 / (correct + incorrect) as f64)
}

/// One in-scope ranked pair with the recall reached at its rank.
struct Walked<'a> {
    pair: &'a ScoredPair,
    positive: bool,
    recall: f64,
    precision: f64,
}

fn walk<'a>(ranked: &'a [ScoredPair], gt: &GroundTruth) -> Result<Vec<Walked<'a>>> {
    let relevant = gt.num_pairs();
    if relevant == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let mut seen = HashSet::new();
    let (mut tp, mut n) = (0usize, 0usize);
    let mut out = Vec::new();
    for p in ranked {
        if !gt.contains_short_form(&p.short_form)
            || !seen.insert((p.short_form.as_str(), p.long_form.as_str()))
        {
            continue;
        }
        let positive = gt.contains(&p.short_form, &p.long_form);
        n += 1;
        tp += usize::from(positive);
        out.push(Walked {
            pair: p,
            positive,
            recall: tp as f64 / relevant as f64,
            precision: tp as f64 / n as f64,
        });
    }
    Ok(out)
}

fn bin_of(recall: f64, bins: usize) -> usize {
    ((recall * bins as f64) as usize).min(bins - 1)
}

/// Samples up to `per_bin` measured false positives from each of `bins`
/// equal-width recall ranges. A pair belongs to the range holding the
/// recall reached at its rank.
pub fn sample_false_positives(
    ranked: &[ScoredPair],
    gt: &GroundTruth,
    bins: usize,
    per_bin: usize,
    seed: u64,
) -> Result<SampleSheet> {
    if bins == 0 {
        return Err(Error::Config("bins must be positive".into()));
    }
    let walked = walk(ranked, gt)?;
    let mut by_bin: Vec<Vec<&Walked>> = vec![Vec::new(); bins];
    for w in walked.iter().filter(|w| !w.positive) {
        by_bin[bin_of(w.recall, bins)].push(w);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for (bin, fps) in by_bin.iter().enumerate() {
        let mut picked: Vec<usize> =
            rand::seq::index::sample(&mut rng, fps.len(), per_bin.min(fps.len())).into_vec();
        picked.sort_unstable();
        rows.extend(picked.into_iter().map(|i| SampleRow {
            bin,
            short_form: fps[i].pair.short_form.clone(),
            long_form: fps[i].pair.long_form.clone(),
            score: fps[i].pair.score,
            verdict: None,
        }));
    }
    Ok(SampleSheet { rows })
}

pub fn write_sheet<W: Write>(mut w: W, sheet: &SampleSheet, header: &[String]) -> std::io::Result<()> {
    for h in header {
        writeln!(w, "# {h}")?;
    }
    writeln!(w, "{SHEET_HEADER}")?;
    for r in &sheet.rows {
        let verdict = r.verdict.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.bin,
            r.short_form,
            r.long_form,
            fmt_sig(r.score, 12),
            verdict
        )?;
    }
    Ok(())
}

pub fn read_sheet(path: &Path) -> Result<SampleSheet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| Error::parse(path.display().to_string(), n + 1, m);
        if !saw_header {
            if line.trim_end() != SHEET_HEADER {
                return Err(bad("missing sheet header"));
            }
            saw_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if !(4..=5).contains(&cols.len()) {
            return Err(bad("expected 5 columns"));
        }
        let verdict = match cols.get(4).map(|v| v.trim().to_ascii_lowercase()).as_deref() {
            None | Some("") => None,
            Some("correct") => Some(Verdict::Correct),
            Some("incorrect") => Some(Verdict::Incorrect),
            Some(_) => return Err(bad("verdict must be correct, incorrect or empty")),
        };
        rows.push(SampleRow {
            bin: cols[0].parse().map_err(|_| bad("bad bin"))?,
            short_form: cols[1].to_string(),
            long_form: cols[2].to_string(),
            score: cols[3].parse().map_err(|_| bad("bad score"))?,
            verdict,
        });
    }
    Ok(SampleSheet { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinPrecision {
    pub bin: usize,
    pub recall_lo: f64,
    pub recall_hi: f64,
    /// Pseudo-precision at the deepest rank falling in the bin; `None` if
    /// no ranked pair falls in it.
    pub pseudo_precision: Option<f64>,
    pub correct: usize,
    pub incorrect: usize,
    /// `1 - ter`, when the bin has both a pseudo-precision and verdicts.
    pub corrected_precision: Option<f64>,
}

/// Corrected precision per recall bin from a filled-in sheet.
pub fn apply_verdicts(
    sheet: &SampleSheet,
    ranked: &[ScoredPair],
    gt: &GroundTruth,
    bins: usize,
) -> Result<Vec<BinPrecision>> {
    if bins == 0 {
        return Err(Error::Config("bins must be positive".into()));
    }
    let walked = walk(ranked, gt)?;
    let mut pseudo = vec![None; bins];
    for w in &walked {
        pseudo[bin_of(w.recall, bins)] = Some(w.precision);
    }
    let mut out: Vec<BinPrecision> = (0..bins)
        .map(|b| BinPrecision {
            bin: b,
            recall_lo: b as f64 / bins as f64,
            recall_hi: (b + 1) as f64 / bins as f64,
            pseudo_precision: pseudo[b],
            correct: 0,
            incorrect: 0,
            corrected_precision: None,
        })
        .collect();
    for r in &sheet.rows {
        let slot = out
            .get_mut(r.bin)
            .ok_or_else(|| Error::Config(format!("sheet bin {} outside 0..{bins}", r.bin)))?;
        match r.verdict {
            Some(Verdict::Correct) => slot.correct += 1,
            Some(Verdict::Incorrect) => slot.incorrect += 1,
            None => {}
        }
    }
    for b in &mut out {
        if let (Some(pp), true) = (b.pseudo_precision, b.correct + b.incorrect > 0) {
            b.corrected_precision = Some(1.0 - true_error_rate(pp, b.correct, b.incorrect)?);
        }
    }
    Ok(out)
}

/// `bin,recall_lo,recall_hi,pseudo_precision,correct,incorrect,corrected_precision`
pub fn write_bin_report<W: Write>(mut w: W, bins: &[BinPrecision], header: &[String]) -> std::io::Result<()> {
    for h in header {
        writeln!(w, "# {h}")?;
    }
    writeln!(w, "bin,recall_lo,recall_hi,pseudo_precision,correct,incorrect,corrected_precision")?;
    let opt = |x: Option<f64>| x.map(|v| fmt_sig(v, 9)).unwrap_or_default();
    for b in bins {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            b.bin,
            fmt_sig(b.recall_lo, 9),
            fmt_sig(b.recall_hi, 9),
            opt(b.pseudo_precision),
            b.correct,
            b.incorrect,
            opt(b.corrected_precision)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_truth::PairSource;

    fn pair(sf: &str, lf: &str, score: f64) -> ScoredPair {
        ScoredPair {
            short_form: sf.into(),
            long_form: lf.into(),
            score,
        }
    }

    #[test]
    fn ter_formula() {
        assert!((true_error_rate(0.8, 15, 5).unwrap() - 0.05).abs() < 1e-15);
        assert!((true_error_rate(0.7, 0, 4).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(true_error_rate(0.7, 4, 0).unwrap(), 0.0);
        assert!(matches!(true_error_rate(0.5, 0, 0), Err(Error::EmptySample)));
    }

    fn fixture() -> (GroundTruth, Vec<ScoredPair>) {
        let mut gt = GroundTruth::default();
        gt.insert("A".into(), "a t".into(), PairSource::Redirect);
        gt.insert("B".into(), "b t".into(), PairSource::Redirect);
        let mut ranked = vec![pair("A", "a t", 0.99)];
        ranked.extend((0..3).map(|i| pair("A", &format!("a f{i}"), 0.9 - i as f64 * 0.01)));
        ranked.push(pair("B", "b t", 0.5));
        ranked.extend((0..30).map(|i| pair("B", &format!("b f{i}"), 0.4 - i as f64 * 0.001)));
        (gt, ranked)
    }

    #[test]
    fn small_bins_are_exhausted() {
        let (gt, ranked) = fixture();
        let sheet = sample_false_positives(&ranked, &gt, 2, 20, 1).unwrap();
        assert_eq!(sheet.rows.iter().filter(|r| r.bin == 0).count(), 0);
        // Recall is 0.5 after the first true positive, so the 3 early FPs
        // land in bin 1 with the 30 late ones; 20 are kept.
        assert_eq!(sheet.rows.iter().filter(|r| r.bin == 1).count(), 20);
        let sheet = sample_false_positives(&ranked, &gt, 4, 20, 1).unwrap();
        assert_eq!(sheet.rows.iter().filter(|r| r.bin == 2).count(), 3);
        assert_eq!(sheet.rows.iter().filter(|r| r.bin == 3).count(), 20);
        assert!(sheet.rows.iter().all(|r| !gt.contains(&r.short_form, &r.long_form)));
        assert_eq!(sheet, sample_false_positives(&ranked, &gt, 4, 20, 1).unwrap());
    }

    #[test]
    fn sheet_round_trip_and_verdicts() {
        let (gt, ranked) = fixture();
        let mut sheet = sample_false_positives(&ranked, &gt, 4, 20, 9).unwrap();
        for (i, r) in sheet.rows.iter_mut().filter(|r| r.bin == 3).enumerate() {
            r.verdict = Some(if i < 15 { Verdict::Correct } else { Verdict::Incorrect });
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sheet.tsv");
        write_sheet(std::fs::File::create(&path).unwrap(), &sheet, &[]).unwrap();
        assert_eq!(read_sheet(&path).unwrap(), sheet);

        let report = apply_verdicts(&sheet, &ranked, &gt, 4).unwrap();
        let last = &report[3];
        assert_eq!((last.correct, last.incorrect), (15, 5));
        let pp = 2.0 / 35.0;
        assert!((last.pseudo_precision.unwrap() - pp).abs() < 1e-15);
        let expected = 1.0 - (1.0 - pp) * 0.25;
        assert!((last.corrected_precision.unwrap() - expected).abs() < 1e-15);
        assert_eq!(report[0].pseudo_precision, None);
    }
}
