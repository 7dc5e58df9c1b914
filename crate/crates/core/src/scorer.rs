//! Feature assembly and the logistic combiner.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alignment::{surface_score, AlignmentConfig, AlignmentModel};
use crate::candidates::ScoredCandidate;
use crate::corpus::{CorpusIndex, LanguageProfile};
use crate::embeddings::{semantic_features, EmbeddingModel, SemanticFeatures};
use crate::util::{fmt_sig, neg_log_sigmoid, sigmoid};
use crate::{Error, Result};

pub const NUM_FEATURES: usize = 15;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "sh_score",
    "cs2_score",
    "cs2_present",
    "cbow_sim",
    "cbow_exp_sim",
    "cbow_logit_sim",
    "cbow_missing",
    "lsa_sim",
    "lsa_exp_sim",
    "lsa_logit_sim",
    "lsa_missing",
    "log_cooc",
    "log_freq_sf",
    "log_freq_lf",
    "alignment_ss",
];

pub type FeatureArray = [f64; NUM_FEATURES];

/// Every feature of one candidate pair. Absent sources are imputed with 0
/// next to an indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// `ln(1 + parenthetical count)`
    pub sh_score: f64,
    pub cs2_score: f64,
    pub cs2_present: f64,
    pub cbow: SemanticBlock,
    pub lsa: SemanticBlock,
    pub log_cooc: f64,
    pub log_freq_sf: f64,
    pub log_freq_lf: f64,
    pub alignment_ss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SemanticBlock {
    pub sim: f64,
    pub exp_sim: f64,
    pub logit_sim: f64,
    pub missing: f64,
}

impl From<SemanticFeatures> for SemanticBlock {
    fn from(s: SemanticFeatures) -> Self {
        Self {
            sim: s.sim.unwrap_or(0.0),
            exp_sim: s.exp_sim.unwrap_or(0.0),
            logit_sim: s.logit_sim.unwrap_or(0.0),
            missing: if s.missing { 1.0 } else { 0.0 },
        }
    }
}

impl FeatureVector {
    pub fn to_array(&self) -> FeatureArray {
        [
            self.sh_score,
            self.cs2_score,
            self.cs2_present,
            self.cbow.sim,
            self.cbow.exp_sim,
            self.cbow.logit_sim,
            self.cbow.missing,
            self.lsa.sim,
            self.lsa.exp_sim,
            self.lsa.logit_sim,
            self.lsa.missing,
            self.log_cooc,
            self.log_freq_sf,
            self.log_freq_lf,
            self.alignment_ss,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Which feature groups the combiner may use; each level includes the
/// previous ones.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMask {
    /// Parenthetical and window scores only.
    Candidates,
    /// Adds both embedding blocks and the log counts.
    #[serde(alias = "+embeddings")]
    Embeddings,
    /// Adds the alignment surface score.
    #[serde(alias = "+alignment")]
    Alignment,
}

impl FeatureMask {
    pub const ALL: [FeatureMask; 3] = [Self::Candidates, Self::Embeddings, Self::Alignment];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Candidates => "candidates",
            Self::Embeddings => "embeddings",
            Self::Alignment => "alignment",
        }
    }

    pub fn includes(self, feature: usize) -> bool {
        let needed = match feature {
            0..=2 => Self::Candidates,
            3..=13 => Self::Embeddings,
            _ => Self::Alignment,
        };
        needed <= self
    }

    pub fn active(self) -> impl Iterator<Item = usize> {
        (0..NUM_FEATURES).filter(move |&j| self.includes(j))
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMask {
    type Err = Error;

    /// Accepts the names with or without a leading `+`.
    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix('+').unwrap_or(s) {
            "candidates" => Ok(Self::Candidates),
            "embeddings" => Ok(Self::Embeddings),
            "alignment" => Ok(Self::Alignment),
            _ => Err(Error::Config(format!(
                "unknown feature mask {s:?} (expected candidates, +embeddings or +alignment)"
            ))),
        }
    }
}

/// Models and indexes feature assembly reads from. A missing embedding
/// model yields the missing indicator; a missing alignment model yields 0.
#[derive(Clone, Copy)]
pub struct FeatureContext<'a> {
    pub profile: &'a LanguageProfile,
    pub index: &'a CorpusIndex,
    pub cbow: Option<&'a EmbeddingModel>,
    pub lsa: Option<&'a EmbeddingModel>,
    pub alignment: Option<&'a AlignmentModel>,
    pub alignment_config: &'a AlignmentConfig,
}

impl FeatureContext<'_> {
    pub fn assemble(&self, cand: &ScoredCandidate) -> FeatureVector {
        let lf = self.profile.long_form_tokens(&cand.long_form);
        let counts = self.index.pair_counts(&cand.short_form, &lf);
        let semantic = |m: Option<&EmbeddingModel>| {
            m.map_or(SemanticFeatures::MISSING, |m| {
                semantic_features(m, &cand.short_form, &lf)
            })
            .into()
        };
        FeatureVector {
            sh_score: f64::from(cand.sh_score).ln_1p(),
            cs2_score: cand.cs2_score.unwrap_or(0.0),
            cs2_present: if cand.cs2_score.is_some() { 1.0 } else { 0.0 },
            cbow: semantic(self.cbow),
            lsa: semantic(self.lsa),
            log_cooc: (counts.cooc as f64).ln_1p(),
            log_freq_sf: (counts.freq_sf as f64).ln_1p(),
            log_freq_lf: (counts.freq_lf as f64).ln_1p(),
            alignment_ss: self.alignment.map_or(0.0, |m| {
                surface_score(m, &cand.short_form, &lf, self.alignment_config).score
            }),
        }
    }

    /// [`Self::assemble`] over many candidates, split across `threads`
    /// workers; output order follows the input.
    pub fn assemble_all(&self, cands: &[ScoredCandidate], threads: usize) -> Vec<FeatureVector> {
        if threads <= 1 || cands.len() < 2 {
            return cands.iter().map(|c| self.assemble(c)).collect();
        }
        let chunk = cands.len().div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = cands
                .chunks(chunk)
                .map(|part| scope.spawn(move || part.iter().map(|c| self.assemble(c)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("feature worker"))
                .collect()
        })
    }
}

pub fn assemble_features(ctx: &FeatureContext<'_>, cand: &ScoredCandidate) -> FeatureVector {
    ctx.assemble(cand)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub short_form: String,
    pub long_form: String,
    pub features: FeatureVector,
    pub label: bool,
    pub fold: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinerModel {
    pub mask: FeatureMask,
    pub weights: FeatureArray,
    pub bias: f64,
}

impl CombinerModel {
    pub fn zero(mask: FeatureMask) -> Self {
        Self {
            mask,
            weights: [0.0; NUM_FEATURES],
            bias: 0.0,
        }
    }

    pub fn margin(&self, x: &FeatureArray) -> f64 {
        self.bias
            + self
                .mask
                .active()
                .map(|j| self.weights[j] * x[j])
                .sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    /// `feature_name<TAB>weight` for the active features, then `bias`.
    pub fn write_tsv<W: Write>(&self, mut w: W, header: &[String]) -> std::io::Result<()> {
        for h in header {
            writeln!(w, "# {h}")?;
        }
        writeln!(w, "# mask={}", self.mask)?;
        for j in self.mask.active() {
            writeln!(w, "{}\t{}", FEATURE_NAMES[j], fmt_sig(self.weights[j], 12))?;
        }
        writeln!(w, "bias\t{}", fmt_sig(self.bias, 12))
    }

    /// The mask is the smallest one covering every listed feature.
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut weights = [0.0; NUM_FEATURES];
        let mut bias = None;
        let mut mask = FeatureMask::Candidates;
        for (n, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| Error::parse(path.display().to_string(), n + 1, m);
            let (name, value) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected feature_name<TAB>weight"))?;
            let value: f64 = value.trim().parse().map_err(|_| bad("bad weight"))?;
            if name == "bias" {
                bias = Some(value);
                continue;
            }
            let j = FEATURE_NAMES
                .iter()
                .position(|f| *f == name)
                .ok_or_else(|| bad("unknown feature"))?;
            weights[j] = value;
            while !mask.includes(j) {
                mask = FeatureMask::ALL[mask as usize + 1];
            }
        }
        let bias = bias.ok_or_else(|| Error::parse(path.display().to_string(), 0, "missing bias"))?;
        Ok(Self {
            mask,
            weights,
            bias,
        })
    }
}

/// `sigmoid(w·x + b)`
pub fn score(model: &CombinerModel, fv: &FeatureVector) -> f64 {
    sigmoid(model.margin(&fv.to_array()))
}

/// Mean log loss plus `l2 · |w|²` (the bias is not penalised), and its
/// gradient. Only features active in the model's mask contribute.
pub fn combiner_objective(
    model: &CombinerModel,
    data: &[(FeatureArray, bool)],
    l2: f64,
) -> (f64, CombinerModel) {
    let mut loss = 0.0;
    let mut grad = CombinerModel::zero(model.mask);
    for (x, y) in data {
        let z = model.margin(x);
        loss += if *y { neg_log_sigmoid(z) } else { neg_log_sigmoid(-z) };
        let r = sigmoid(z) - if *y { 1.0 } else { 0.0 };
        for j in model.mask.active() {
            grad.weights[j] += r * x[j];
        }
        grad.bias += r;
    }
    let n = data.len().max(1) as f64;
    loss /= n;
    grad.bias /= n;
    for j in model.mask.active() {
        grad.weights[j] = grad.weights[j] / n + 2.0 * l2 * model.weights[j];
        loss += l2 * model.weights[j] * model.weights[j];
    }
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinerHyper {
    pub mask: FeatureMask,
    pub l2: f64,
    pub max_iters: usize,
    /// Stop when the gradient norm falls below this.
    pub tol: f64,
    /// Fraction of negatives kept; 1 keeps all.
    pub negative_keep: f64,
    pub seed: u64,
}

impl Default for CombinerHyper {
    fn default() -> Self {
        Self {
            mask: FeatureMask::Alignment,
            l2: 1e-4,
            max_iters: 2000,
            tol: 1e-9,
            negative_keep: 1.0,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CombinerFit {
    pub model: CombinerModel,
    /// Final value of the training objective.
    pub loss: f64,
    pub iterations: usize,
}

/// Fits on the examples whose fold is in `train_folds`.
pub fn train_combiner(
    examples: &[LabeledExample],
    train_folds: &[usize],
    hyper: &CombinerHyper,
) -> Result<CombinerFit> {
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let data: Vec<(FeatureArray, bool)> = examples
        .iter()
        .filter(|e| train_folds.contains(&e.fold))
        .filter(|e| e.label || hyper.negative_keep >= 1.0 || rng.random::<f64>() < hyper.negative_keep)
        .map(|e| (e.features.to_array(), e.label))
        .collect();
    fit_arrays(&data, hyper)
}

/// Gradient descent with backtracking in standardized coordinates; the
/// returned weights apply to raw features.
pub fn fit_arrays(data: &[(FeatureArray, bool)], hyper: &CombinerHyper) -> Result<CombinerFit> {
    let positives = data.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::DegenerateTrainingSet(format!(
            "combiner training needs both labels ({positives} positive of {})",
            data.len()
        )));
    }
    let n = data.len() as f64;
    let active: Vec<usize> = hyper.mask.active().collect();
    let mut mean = [0.0; NUM_FEATURES];
    let mut scale = [0.0; NUM_FEATURES];
    for &j in &active {
        mean[j] = data.iter().map(|(x, _)| x[j]).sum::<f64>() / n;
        let var = data.iter().map(|(x, _)| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
        // Constant columns carry no signal; their weight stays at 0.
        scale[j] = if var > 1e-24 { var.sqrt() } else { 0.0 };
    }

    // Standardized parameters: raw w_j = v_j / s_j, raw b = c - Σ v_j m_j / s_j.
    let to_raw = |v: &FeatureArray, c: f64| {
        let mut m = CombinerModel::zero(hyper.mask);
        m.bias = c;
        for &j in &active {
            if scale[j] > 0.0 {
                m.weights[j] = v[j] / scale[j];
                m.bias -= v[j] * mean[j] / scale[j];
            }
        }
        m
    };
    let to_std_grad = |g: &CombinerModel| {
        let mut gv = [0.0; NUM_FEATURES];
        for &j in &active {
            if scale[j] > 0.0 {
                gv[j] = (g.weights[j] - g.bias * mean[j]) / scale[j];
            }
        }
        (gv, g.bias)
    };

    let base = positives as f64 / n;
    let mut v = [0.0; NUM_FEATURES];
    let mut c = (base / (1.0 - base)).ln();
    let (mut loss, g) = combiner_objective(&to_raw(&v, c), data, hyper.l2);
    let (mut gv, mut gc) = to_std_grad(&g);
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < hyper.max_iters {
        let gnorm2 = gc * gc + gv.iter().map(|x| x * x).sum::<f64>();
        if gnorm2.sqrt() < hyper.tol {
            break;
        }
        iterations += 1;
        let mut moved = false;
        while step > 1e-12 {
            let mut nv = v;
            for &j in &active {
                nv[j] -= step * gv[j];
            }
            let nc = c - step * gc;
            let (nl, ng) = combiner_objective(&to_raw(&nv, nc), data, hyper.l2);
            // Armijo sufficient decrease.
            if nl <= loss - 0.5 * step * gnorm2 {
                (v, c, loss) = (nv, nc, nl);
                (gv, gc) = to_std_grad(&ng);
                moved = true;
                step = (step * 2.0).min(64.0);
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let model = to_raw(&v, c);
    debug_assert!(model.is_finite());
    Ok(CombinerFit {
        model,
        loss,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub short_form: String,
    pub long_form: String,
    pub score: f64,
}

/// Score descending, ties by `(short_form, long_form)`.
pub fn rank(pairs: &mut [ScoredPair]) {
    pairs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.short_form.cmp(&b.short_form))
            .then_with(|| a.long_form.cmp(&b.long_form))
    });
}

pub fn write_scored<W: Write>(mut w: W, pairs: &[ScoredPair], header: &[String]) -> std::io::Result<()> {
    for h in header {
        writeln!(w, "# {h}")?;
    }
    for p in pairs {
        writeln!(w, "{}\t{}\t{}", p.short_form, p.long_form, fmt_sig(p.score, 12))?;
    }
    Ok(())
}

pub fn read_scored(path: &Path) -> Result<Vec<ScoredPair>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let bad = |m: &str| Error::parse(path.display().to_string(), n + 1, m);
        let mut cols = line.split('\t');
        let (Some(sf), Some(lf), Some(s), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
            return Err(bad("expected 3 columns"));
        };
        out.push(ScoredPair {
            short_form: sf.to_string(),
            long_form: lf.to_string(),
            score: s.parse().map_err(|_| bad("bad score"))?,
        });
    }
    Ok(out)
}
