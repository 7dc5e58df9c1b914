//! Cross-validation folds, pseudo-precision curves and their aggregation.

mod review;
mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ground_truth::GroundTruth;
use crate::scorer::ScoredPair;
use crate::util::fmt_sig;
use crate::{Error, Result};

pub use review::{
    apply_verdicts, read_sheet, sample_false_positives, true_error_rate, write_bin_report,
    write_sheet, BinPrecision, SampleRow, SampleSheet, Verdict,
};
pub use synthetic::{generate_synthetic_fixture, SyntheticConfig, SyntheticFixture};

/// Recall points used to average curves across folds.
pub const GRID_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    folds: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, sf: &str) -> Option<usize> {
        self.folds.get(sf).copied()
    }

    pub fn members(&self, fold: usize) -> impl Iterator<Item = &str> {
        self.folds
            .iter()
            .filter(move |(_, f)| **f == fold)
            .map(|(s, _)| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.folds.iter().map(|(s, f)| (s.as_str(), *f))
    }

    /// Writes `short_form<TAB>fold` lines.
    pub fn write_tsv<W: Write>(&self, mut w: W, header: &[String]) -> std::io::Result<()> {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        writeln!(w, "# k={} seed={}", self.k, self.seed)?;
        for (sf, f) in &self.folds {
            writeln!(w, "{sf}\t{f}")?;
        }
        Ok(())
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut folds = BTreeMap::new();
        let (mut k, mut seed) = (None, 0);
        for (n, line) in text.lines().enumerate() {
            let bad = |m: &str| Error::parse(path.display().to_string(), n + 1, m);
            if let Some(meta) = line.strip_prefix("# k=") {
                let (kv, sv) = meta.split_once(" seed=").ok_or_else(|| bad("bad fold header"))?;
                k = Some(kv.parse().map_err(|_| bad("bad k"))?);
                seed = sv.parse().map_err(|_| bad("bad seed"))?;
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (sf, f) = line.split_once('\t').ok_or_else(|| bad("expected short_form<TAB>fold"))?;
            folds.insert(sf.to_string(), f.parse().map_err(|_| bad("bad fold"))?);
        }
        let k = k.ok_or_else(|| Error::parse(path.display().to_string(), 0, "missing fold header"))?;
        if folds.values().any(|&f| f >= k) {
            return Err(Error::parse(path.display().to_string(), 0, "fold id out of range"));
        }
        Ok(Self { k, seed, folds })
    }

    /// Folds other than `test`.
    pub fn train_folds(&self, test: usize) -> Vec<usize> {
        (0..self.k).filter(|&f| f != test).collect()
    }
}

/// Sorts, shuffles under `seed`, and deals the short-forms round-robin.
pub fn split_folds<I, S>(short_forms: I, k: usize, seed: u64) -> Result<FoldAssignment>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut sfs: Vec<String> = short_forms.into_iter().map(Into::into).collect();
    sfs.sort();
    sfs.dedup();
    if k == 0 || sfs.len() < k {
        return Err(Error::TooFewShortForms {
            folds: k,
            got: sfs.len(),
        });
    }
    sfs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let folds = sfs.into_iter().enumerate().map(|(i, s)| (s, i % k)).collect();
    Ok(FoldAssignment { k, seed, folds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// One point per true positive, in rank order.
    pub points: Vec<PrPoint>,
    /// Precision after each in-scope ranked pair.
    pub precision_by_rank: Vec<f64>,
    /// Ground-truth pairs in scope: the recall denominator.
    pub relevant: usize,
    pub auc: f64,
}

/// Walks a ranking (best first) against `gt`. Pairs whose short-form is
/// not in `gt` are skipped; repeated pairs count once.
pub fn pr_curve(ranked: &[ScoredPair], gt: &GroundTruth) -> Result<PrCurve> {
    let relevant = gt.num_pairs();
    if relevant == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let mut seen = HashSet::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut points = Vec::new();
    let mut precision_by_rank = Vec::new();
    let mut precision_sum = 0.0;
    for p in ranked {
        if !gt.contains_short_form(&p.short_form)
            || !seen.insert((p.short_form.as_str(), p.long_form.as_str()))
        {
            continue;
        }
        if gt.contains(&p.short_form, &p.long_form) {
            tp += 1;
            let precision = tp as f64 / (tp + fp) as f64;
            precision_sum += precision;
            points.push(PrPoint {
                recall: tp as f64 / relevant as f64,
                precision,
            });
        } else {
            fp += 1;
        }
        precision_by_rank.push(tp as f64 / (tp + fp) as f64);
    }
    Ok(PrCurve {
        points,
        precision_by_rank,
        relevant,
        auc: precision_sum / relevant as f64,
    })
}

impl PrCurve {
    /// Step-wise precision at `recall`: the precision of the first point
    /// reaching it, 0 if never reached.
    pub fn precision_at(&self, recall: f64) -> f64 {
        let eps = 1e-12;
        self.points
            .iter()
            .find(|p| p.recall + eps >= recall)
            .map_or(0.0, |p| p.precision)
    }

    /// `recall,precision` rows and an `auc,<value>` footer.
    pub fn write_csv<W: Write>(&self, w: W, header: &[String]) -> std::io::Result<()> {
        write_curve_csv(
            w,
            self.points.iter().map(|p| (p.recall, p.precision)),
            self.auc,
            header,
        )
    }
}

pub fn write_curve_csv<W, I>(mut w: W, points: I, auc: f64, header: &[String]) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (f64, f64)>,
{
    for h in header {
        writeln!(w, "# {h}")?;
    }
    writeln!(w, "recall,precision")?;
    for (r, p) in points {
        writeln!(w, "{},{}", fmt_sig(r, 9), fmt_sig(p, 9))?;
    }
    writeln!(w, "auc,{}", fmt_sig(auc, 9))
}

/// Fold curves averaged on recall `i / GRID_POINTS`, `i = 1..=GRID_POINTS`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedCurve {
    pub grid: Vec<PrPoint>,
    /// Mean of the averaged precisions: the area under the averaged curve.
    pub auc: f64,
    pub fold_aucs: Vec<f64>,
}

pub fn average_curves(curves: &[PrCurve]) -> AveragedCurve {
    let grid: Vec<PrPoint> = (1..=GRID_POINTS)
        .map(|i| {
            let recall = i as f64 / GRID_POINTS as f64;
            let precision = curves.iter().map(|c| c.precision_at(recall)).sum::<f64>()
                / curves.len().max(1) as f64;
            PrPoint { recall, precision }
        })
        .collect();
    let auc = grid.iter().map(|p| p.precision).sum::<f64>() / GRID_POINTS as f64;
    AveragedCurve {
        grid,
        auc,
        fold_aucs: curves.iter().map(|c| c.auc).collect(),
    }
}

impl AveragedCurve {
    pub fn write_csv<W: Write>(&self, w: W, header: &[String]) -> std::io::Result<()> {
        write_curve_csv(w, self.grid.iter().map(|p| (p.recall, p.precision)), self.auc, header)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_truth::PairSource;

    fn gt(pairs: &[(&str, &str)]) -> GroundTruth {
        let mut g = GroundTruth::default();
        for (s, l) in pairs {
            g.insert(s.to_string(), l.to_string(), PairSource::Redirect);
        }
        g
    }

    fn ranked(pairs: &[(&str, &str)]) -> Vec<ScoredPair> {
        let n = pairs.len() as f64;
        pairs
            .iter()
            .enumerate()
            .map(|(i, (s, l))| ScoredPair {
                short_form: s.to_string(),
                long_form: l.to_string(),
                score: 1.0 - i as f64 / n,
            })
            .collect()
    }

    #[test]
    fn fold_sizes() {
        let sizes = |n: usize| {
            let a = split_folds((0..n).map(|i| format!("S{i}")), 3, 4).unwrap();
            let mut s: Vec<usize> = (0..3).map(|f| a.members(f).count()).collect();
            s.sort();
            s
        };
        assert_eq!(sizes(9), [3, 3, 3]);
        assert_eq!(sizes(10), [3, 3, 4]);
        assert!(matches!(
            split_folds(["A", "B"], 3, 0),
            Err(Error::TooFewShortForms { folds: 3, got: 2 })
        ));
    }

    #[test]
    fn folds_are_seeded() {
        let sfs: Vec<String> = (0..30).map(|i| format!("S{i}")).collect();
        let a = split_folds(sfs.clone(), 3, 1).unwrap();
        let b = split_folds(sfs.iter().rev().cloned(), 3, 1).unwrap();
        assert_eq!(a, b);
        let c = split_folds(sfs, 3, 2).unwrap();
        assert_ne!(a.folds, c.folds);
    }

    #[test]
    fn fold_file_round_trip() {
        let a = split_folds((0..7).map(|i| format!("S{i}")), 3, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("folds.tsv");
        a.write_tsv(std::fs::File::create(&path).unwrap(), &["x".into()]).unwrap();
        assert_eq!(FoldAssignment::read_tsv(&path).unwrap(), a);
    }

    #[test]
    fn golden_walk() {
        let g = gt(&[("A", "a x"), ("A", "a y")]);
        let c = pr_curve(&ranked(&[("A", "a x"), ("A", "a z"), ("A", "a y")]), &g).unwrap();
        assert_eq!(c.points.len(), 2);
        assert_eq!((c.points[0].recall, c.points[0].precision), (0.5, 1.0));
        assert_eq!(c.points[1].recall, 1.0);
        assert!((c.points[1].precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.auc - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_ranking() {
        let g = gt(&[("A", "a x"), ("B", "b y")]);
        let c = pr_curve(&ranked(&[("A", "a x"), ("B", "b y"), ("A", "a q")]), &g).unwrap();
        assert_eq!(c.auc, 1.0);
    }

    #[test]
    fn unknown_short_forms_are_ignored() {
        let g = gt(&[("A", "a x"), ("A", "a y")]);
        let base = pr_curve(&ranked(&[("A", "a x"), ("A", "a z"), ("A", "a y")]), &g).unwrap();
        let with = pr_curve(
            &ranked(&[("Q", "q q"), ("A", "a x"), ("Z", "z"), ("A", "a z"), ("A", "a y")]),
            &g,
        )
        .unwrap();
        assert_eq!(base, with);
    }

    #[test]
    fn empty_ground_truth() {
        assert!(matches!(
            pr_curve(&[], &GroundTruth::default()),
            Err(Error::EmptyGroundTruth)
        ));
    }

    #[test]
    fn averaging_identical_curves_is_identity() {
        let g = gt(&[("A", "a x"), ("A", "a y")]);
        let c = pr_curve(&ranked(&[("A", "a x"), ("A", "a z"), ("A", "a y")]), &g).unwrap();
        let avg = average_curves(&[c.clone(), c]);
        assert_eq!(avg.grid.len(), GRID_POINTS);
        assert_eq!(avg.grid[49].precision, 1.0);
        assert!((avg.grid[50].precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((avg.auc - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn csv_footer() {
        let g = gt(&[("A", "a x")]);
        let c = pr_curve(&ranked(&[("A", "a x")]), &g).unwrap();
        let mut out = Vec::new();
        c.write_csv(&mut out, &["config=abc".into()]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "# config=abc\nrecall,precision\n1,1\nauc,1\n");
    }
}
