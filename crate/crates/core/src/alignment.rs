//! Surface similarity by maximum over character alignments.
//!
//! An alignment maps every short-form character either to a distinct,
//! case-insensitively equal long-form character or to NULL. Each alignment
//! is described by five features, scored by a linear model, and the pair's
//! surface score is the best alignment score. Training routes the gradient
//! through the winning alignment only.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::util::{fmt_sig, neg_log_sigmoid, sigmoid};
use crate::{Error, Result};

pub const NUM_FEATURES: usize = 5;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "token_initial_count",
    "exp_pct_token_initial",
    "exp_pct_lf_tokens_unmatched",
    "exp_pct_null",
    "swap_count",
];

/// A long-form character position. Ordering is lexicographic, which is
/// also the flattened left-to-right order used for swap counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LfPos {
    pub token: usize,
    pub ch: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alignment {
    /// One entry per short-form character; `None` is the null match.
    pub mapping: Vec<Option<LfPos>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentConfig {
    /// Maximum number of alignments enumerated per pair.
    pub cap: usize,
    /// Only the earliest matching positions of each character are tried.
    pub max_positions_per_char: usize,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            cap: 50_000,
            max_positions_per_char: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub alignments: Vec<Alignment>,
    pub truncated: bool,
}

fn chars_eq_ignore_case(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Matching positions for every short-form character, earliest first.
fn option_sets<S: AsRef<str>>(sf: &[char], lf: &[S], limit: usize) -> Vec<Vec<LfPos>> {
    sf.iter()
        .map(|&c| {
            lf.iter()
                .enumerate()
                .flat_map(|(t, tok)| {
                    tok.as_ref()
                        .chars()
                        .enumerate()
                        .filter(move |&(_, d)| chars_eq_ignore_case(c, d))
                        .map(move |(ch, _)| LfPos { token: t, ch })
                })
                .take(limit)
                .collect()
        })
        .collect()
}

/// Depth-first walk over all alignments, positions in lf order with NULL
/// tried last. Stops after `cap` visits; returns whether it was cut short.
fn walk<F>(options: &[Vec<LfPos>], cap: usize, mut visit: F) -> bool
where
    F: FnMut(&[Option<LfPos>]),
{
    fn rec<F: FnMut(&[Option<LfPos>])>(
        options: &[Vec<LfPos>],
        current: &mut Vec<Option<LfPos>>,
        used: &mut HashSet<LfPos>,
        budget: &mut usize,
        visit: &mut F,
    ) -> bool {
        let i = current.len();
        if i == options.len() {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            visit(current);
            return true;
        }
        for &p in &options[i] {
            if used.contains(&p) {
                continue;
            }
            used.insert(p);
            current.push(Some(p));
            let go_on = rec(options, current, used, budget, visit);
            current.pop();
            used.remove(&p);
            if !go_on {
                return false;
            }
        }
        current.push(None);
        let go_on = rec(options, current, used, budget, visit);
        current.pop();
        go_on
    }

    let mut budget = cap;
    let mut current = Vec::with_capacity(options.len());
    let complete = rec(options, &mut current, &mut HashSet::new(), &mut budget, &mut visit);
    !complete
}

pub fn enumerate_alignments<S: AsRef<str>>(
    sf: &str,
    lf: &[S],
    cfg: &AlignmentConfig,
) -> Enumeration {
    let chars: Vec<char> = sf.chars().collect();
    let options = option_sets(&chars, lf, cfg.max_positions_per_char);
    let mut alignments = Vec::new();
    let truncated = walk(&options, cfg.cap.max(1), |m| {
        alignments.push(Alignment {
            mapping: m.to_vec(),
        })
    });
    Enumeration {
        alignments,
        truncated,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentFeatures {
    pub token_initial_count: u32,
    pub exp_pct_token_initial: f64,
    pub exp_pct_lf_tokens_unmatched: f64,
    pub exp_pct_null: f64,
    pub swap_count: u32,
}

impl AlignmentFeatures {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.token_initial_count as f64,
            self.exp_pct_token_initial,
            self.exp_pct_lf_tokens_unmatched,
            self.exp_pct_null,
            self.swap_count as f64,
        ]
    }
}

/// Integer summary from which all five features follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct RawCounts {
    token_initial: u32,
    unmatched_tokens: u32,
    nulls: u32,
    swaps: u32,
}

fn raw_counts(mapping: &[Option<LfPos>], num_tokens: usize) -> RawCounts {
    let mut hit = vec![false; num_tokens];
    let mut token_initial = 0;
    let mut nulls = 0;
    for p in mapping {
        match p {
            Some(p) => {
                hit[p.token] = true;
                token_initial += u32::from(p.ch == 0);
            }
            None => nulls += 1,
        }
    }
    let mut swaps = 0;
    for (i, a) in mapping.iter().enumerate() {
        for b in &mapping[i + 1..] {
            if let (Some(a), Some(b)) = (a, b) {
                swaps += u32::from(a > b);
            }
        }
    }
    RawCounts {
        token_initial,
        unmatched_tokens: hit.iter().filter(|h| !**h).count() as u32,
        nulls,
        swaps,
    }
}

fn features_from_counts(c: RawCounts, sf_len: usize, num_tokens: usize) -> AlignmentFeatures {
    let pct = |n: u32, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
    AlignmentFeatures {
        token_initial_count: c.token_initial,
        exp_pct_token_initial: pct(c.token_initial, sf_len).exp(),
        exp_pct_lf_tokens_unmatched: pct(c.unmatched_tokens, num_tokens).exp(),
        exp_pct_null: pct(c.nulls, sf_len).exp(),
        swap_count: c.swaps,
    }
}

pub fn alignment_features<S: AsRef<str>>(a: &Alignment, sf: &str, lf: &[S]) -> AlignmentFeatures {
    let sf_len = sf.chars().count();
    features_from_counts(raw_counts(&a.mapping, lf.len()), sf_len, lf.len())
}

/// Linear alignment scorer `θ·γ(a)`; the bias only enters standalone
/// training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentModel {
    pub theta: [f64; NUM_FEATURES],
    pub bias: f64,
}

impl Default for AlignmentModel {
    fn default() -> Self {
        Self {
            theta: [0.0; NUM_FEATURES],
            bias: 0.0,
        }
    }
}

impl AlignmentModel {
    pub fn dot(&self, features: &[f64; NUM_FEATURES]) -> f64 {
        self.theta.iter().zip(features).map(|(w, x)| w * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.theta.iter().all(|w| w.is_finite())
    }

    pub fn write_tsv<W: Write>(&self, mut w: W, header: &[String]) -> std::io::Result<()> {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        for (name, v) in FEATURE_NAMES.iter().zip(self.theta) {
            writeln!(w, "{name}\t{}", fmt_sig(v, 9))?;
        }
        writeln!(w, "bias\t{}", fmt_sig(self.bias, 9))
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut model = AlignmentModel::default();
        let mut seen = [false; NUM_FEATURES + 1];
        for (n, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| Error::parse(path.display().to_string(), n + 1, m);
            let (name, value) = line.split_once('\t').ok_or_else(|| bad("expected name<TAB>value"))?;
            let value: f64 = value.trim().parse().map_err(|_| bad("bad weight"))?;
            let slot = if name == "bias" {
                NUM_FEATURES
            } else {
                FEATURE_NAMES
                    .iter()
                    .position(|f| *f == name)
                    .ok_or_else(|| bad("unknown feature"))?
            };
            if slot == NUM_FEATURES {
                model.bias = value;
            } else {
                model.theta[slot] = value;
            }
            seen[slot] = true;
        }
        if !seen.iter().all(|s| *s) {
            return Err(Error::parse(path.display().to_string(), 0, "missing weights"));
        }
        Ok(model)
    }
}

/// Distinct alignment feature vectors of one pair, in first-enumerated
/// order. The maximum of a linear score over these equals the maximum over
/// all enumerated alignments.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub vectors: Vec<[f64; NUM_FEATURES]>,
    pub truncated: bool,
}

impl FeatureSet {
    pub fn new<S: AsRef<str>>(sf: &str, lf: &[S], cfg: &AlignmentConfig) -> Self {
        let chars: Vec<char> = sf.chars().collect();
        let options = option_sets(&chars, lf, cfg.max_positions_per_char);
        let mut seen = HashSet::new();
        let mut vectors = Vec::new();
        let truncated = walk(&options, cfg.cap.max(1), |m| {
            let counts = raw_counts(m, lf.len());
            if seen.insert(counts) {
                vectors.push(features_from_counts(counts, chars.len(), lf.len()).to_array());
            }
        });
        Self { vectors, truncated }
    }

    /// Best score and the index of the first vector reaching it.
    pub fn best(&self, model: &AlignmentModel) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, v) in self.vectors.iter().enumerate() {
            let s = model.dot(v);
            if s > best.0 {
                best = (s, i);
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceScore {
    pub score: f64,
    /// The maximum was taken over a capped subset of alignments.
    pub truncated: bool,
}

pub fn surface_score<S: AsRef<str>>(
    model: &AlignmentModel,
    sf: &str,
    lf: &[S],
    cfg: &AlignmentConfig,
) -> SurfaceScore {
    let set = FeatureSet::new(sf, lf, cfg);
    SurfaceScore {
        score: set.best(model).0,
        truncated: set.truncated,
    }
}

/// A labelled pair with its alignment features precomputed.
#[derive(Debug, Clone)]
pub struct PreparedExample {
    pub features: FeatureSet,
    pub label: bool,
}

impl PreparedExample {
    pub fn new<S: AsRef<str>>(sf: &str, lf: &[S], label: bool, cfg: &AlignmentConfig) -> Self {
        Self {
            features: FeatureSet::new(sf, lf, cfg),
            label,
        }
    }
}

/// Mean logistic loss of `sigmoid(ss + bias)` against the labels plus
/// `l2 · |θ|²`, and its (sub)gradient through each example's first argmax.
pub fn objective(
    model: &AlignmentModel,
    data: &[PreparedExample],
    l2: f64,
) -> (f64, AlignmentModel) {
    let mut loss = 0.0;
    let mut grad = AlignmentModel::default();
    for ex in data {
        let (ss, arg) = ex.features.best(model);
        let z = ss + model.bias;
        let y = if ex.label { 1.0 } else { 0.0 };
        loss += if ex.label {
            neg_log_sigmoid(z)
        } else {
            neg_log_sigmoid(-z)
        };
        let r = sigmoid(z) - y;
        for (g, x) in grad.theta.iter_mut().zip(&ex.features.vectors[arg]) {
            *g += r * x;
        }
        grad.bias += r;
    }
    let n = data.len().max(1) as f64;
    loss /= n;
    grad.bias /= n;
    for (g, w) in grad.theta.iter_mut().zip(&model.theta) {
        *g = *g / n + 2.0 * l2 * w;
    }
    loss += l2 * model.theta.iter().map(|w| w * w).sum::<f64>();
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentHyper {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub alignment: AlignmentConfig,
}

impl Default for AlignmentHyper {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 1.0,
            l2: 0.0,
            seed: 7,
            alignment: AlignmentConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlignmentFit {
    pub model: AlignmentModel,
    /// Objective before the first step and after each accepted step.
    pub loss_curve: Vec<f64>,
}

/// Trains on `(short_form, long_form tokens, label)` triples.
pub fn train_alignment_model<S: AsRef<str>>(
    examples: &[(String, Vec<S>, bool)],
    hyper: &AlignmentHyper,
) -> Result<AlignmentFit> {
    let data: Vec<PreparedExample> = examples
        .iter()
        .map(|(sf, lf, y)| PreparedExample::new(sf, lf, *y, &hyper.alignment))
        .collect();
    train_prepared(&data, hyper)
}

/// Gradient descent with backtracking line search: a step is taken only if
/// it lowers the objective, so the loss curve is strictly decreasing.
pub fn train_prepared(data: &[PreparedExample], hyper: &AlignmentHyper) -> Result<AlignmentFit> {
    let positives = data.iter().filter(|e| e.label).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::DegenerateTrainingSet(format!(
            "alignment training needs both labels ({positives} positive of {})",
            data.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut model = AlignmentModel::default();
    for w in &mut model.theta {
        *w = rng.random_range(-0.01..0.01);
    }

    let (mut loss, mut grad) = objective(&model, data, hyper.l2);
    let mut curve = vec![loss];
    let mut step = hyper.learning_rate;
    for _ in 0..hyper.epochs {
        let gnorm2 = grad.bias * grad.bias + grad.theta.iter().map(|g| g * g).sum::<f64>();
        if gnorm2 < 1e-16 {
            break;
        }
        let mut accepted = None;
        while step > 1e-12 {
            let mut next = model;
            next.bias -= step * grad.bias;
            for (w, g) in next.theta.iter_mut().zip(&grad.theta) {
                *w -= step * g;
            }
            let (l, g) = objective(&next, data, hyper.l2);
            if l < loss - 1e-4 * step * gnorm2 {
                accepted = Some((next, l, g));
                break;
            }
            step *= 0.5;
        }
        let Some((next, l, g)) = accepted else {
            break;
        };
        model = next;
        loss = l;
        grad = g;
        curve.push(loss);
        step = (step * 2.0).min(hyper.learning_rate * 64.0);
    }
    Ok(AlignmentFit {
        model,
        loss_curve: curve,
    })
}
