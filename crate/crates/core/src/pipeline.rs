//! File-level pipeline stages and their configuration.
//!
//! Every stage reads declared inputs (config paths or files in the output
//! directory written by earlier stages) and writes its artifacts to the
//! output directory. Each artifact carries a comment naming the stage and
//! the configuration hash.
//!
//! | stage | reads | writes |
//! |---|---|---|
//! | `build-gt` | `pairs` | `ground_truth.tsv` |
//! | `restrict-gt` | `corpus`, `ground_truth.tsv` | `ground_truth.restricted.tsv`, `folds.tsv` |
//! | `candidates` | `corpus` | `candidates.tsv` |
//! | `train-embeddings` | `corpus` | `cbow.vec` or `lsa.vec` |
//! | `train-alignment` | candidates, restricted ground truth, folds | `alignment.{fold}.tsv` |
//! | `train` | the above plus embeddings | `combiner.{mask}.{fold}.tsv` |
//! | `score` | the above plus combiners | `scored.{mask}.{fold}.tsv`, `scored.{mask}.tsv` |
//! | `evaluate` | fold scores, restricted ground truth, folds | `pr.{mask}.{fold}.csv`, `pr.{mask}.csv` |
//! | `sample-fps` | fold scores, restricted ground truth | `review.{mask}.tsv` |
//! | `apply-verdicts` | a filled review sheet | `review_report.{mask}.csv` |
//! | `synth-fixture` | nothing | `corpus.jsonl`, `pairs.tsv` |
//!
//! `{fold}` is `fold0`, `fold1`, … for cross-validation models and `all`
//! for the model trained on every short-form.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::alignment::{train_prepared, AlignmentConfig, AlignmentHyper, AlignmentModel, FeatureSet, PreparedExample};
use crate::candidates::{
    aggregate, extract_parenthetical, extract_window_candidates, read_candidates, write_candidates,
    ScoredCandidate, WindowConfig,
};
use crate::corpus::{load_corpus, Corpus, CorpusIndex, LanguageProfile};
use crate::embeddings::{
    document_sequences, sentence_sequences, train_cbow, train_lsa, EmbeddingKind, EmbeddingModel,
    TrainConfig,
};
use crate::eval::{
    apply_verdicts as bin_verdicts, average_curves, generate_synthetic_fixture, pr_curve, read_sheet,
    sample_false_positives, split_folds, write_bin_report, write_sheet, FoldAssignment,
    SyntheticConfig,
};
use crate::ground_truth::{build_ground_truth, parse_pair_records, restrict_to_cooccurring, GroundTruth};
use crate::scorer::{
    fit_arrays, rank, read_scored, score as combine, write_scored, CombinerHyper, CombinerModel,
    FeatureContext, FeatureMask, FeatureVector, ScoredPair,
};
use crate::util::short_hash;
use crate::{Error, Result};

/// Flat key/value configuration, read from TOML and overridable by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub lang: String,
    pub corpus: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub out: PathBuf,
    /// Base seed; each randomized stage adds a fixed offset.
    pub seed: u64,
    pub folds: usize,
    pub feature_mask: FeatureMask,
    /// Workers for feature assembly (order-preserving, so deterministic).
    pub threads: usize,

    pub window: usize,
    pub window_threshold: f64,
    pub min_ngram: usize,
    pub max_ngram: usize,

    pub cbow_dim: usize,
    pub cbow_window: usize,
    pub cbow_negatives: usize,
    pub cbow_epochs: usize,
    pub cbow_min_count: usize,
    pub cbow_learning_rate: f64,
    pub cbow_threads: usize,
    pub lsa_dim: usize,
    pub lsa_min_count: usize,

    pub alignment_epochs: usize,
    pub alignment_l2: f64,
    pub alignment_cap: usize,
    pub alignment_max_positions: usize,

    pub combiner_l2: f64,
    pub combiner_max_iters: usize,
    pub negative_keep: f64,

    pub sample_bins: usize,
    pub sample_per_bin: usize,

    pub synth_abbrevs: usize,
    pub synth_docs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let cbow = TrainConfig::default();
        let window = WindowConfig::default();
        let align = AlignmentHyper::default();
        let comb = CombinerHyper::default();
        let synth = SyntheticConfig::default();
        Self {
            lang: "en".into(),
            corpus: None,
            pairs: None,
            out: PathBuf::from("out"),
            seed: 1,
            folds: 3,
            feature_mask: FeatureMask::Alignment,
            threads: 4,
            window: window.window,
            window_threshold: window.threshold,
            min_ngram: window.min_ngram,
            max_ngram: window.max_ngram,
            cbow_dim: cbow.dim,
            cbow_window: cbow.window,
            cbow_negatives: cbow.negatives,
            cbow_epochs: cbow.epochs,
            cbow_min_count: cbow.min_count,
            cbow_learning_rate: cbow.learning_rate,
            cbow_threads: 1,
            lsa_dim: 100,
            lsa_min_count: 2,
            alignment_epochs: align.epochs,
            alignment_l2: align.l2,
            alignment_cap: align.alignment.cap,
            alignment_max_positions: align.alignment.max_positions_per_char,
            combiner_l2: comb.l2,
            combiner_max_iters: comb.max_iters,
            negative_keep: comb.negative_keep,
            sample_bins: 10,
            sample_per_bin: 20,
            synth_abbrevs: synth.n_abbrevs,
            synth_docs: synth.n_docs,
        }
    }
}

const SEED_FOLDS: u64 = 0;
const SEED_CBOW: u64 = 1;
const SEED_LSA: u64 = 2;
const SEED_ALIGNMENT: u64 = 3;
const SEED_COMBINER: u64 = 4;
const SEED_SAMPLE: u64 = 5;
const SEED_FIXTURE: u64 = 6;

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        LanguageProfile::for_code(&self.lang)?;
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.min_ngram == 0 || self.min_ngram > self.max_ngram {
            return Err(Error::Config("need 1 <= min_ngram <= max_ngram".into()));
        }
        if self.sample_bins == 0 {
            return Err(Error::Config("sample_bins must be positive".into()));
        }
        if !(self.negative_keep > 0.0 && self.negative_keep <= 1.0) {
            return Err(Error::Config("negative_keep must be in (0, 1]".into()));
        }
        self.cbow_config().validate()?;
        self.lsa_config().validate()
    }

    pub fn profile(&self) -> Result<LanguageProfile> {
        LanguageProfile::for_code(&self.lang)
    }

    /// Hash of every setting except file locations, so reruns into another
    /// directory produce identical artifacts.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.corpus = None;
        c.pairs = None;
        c.out = PathBuf::new();
        let text = toml::to_string(&c).expect("config serializes");
        short_hash(text.as_bytes())
    }

    pub fn window_config(&self) -> WindowConfig {
        WindowConfig {
            window: self.window,
            threshold: self.window_threshold,
            min_ngram: self.min_ngram,
            max_ngram: self.max_ngram,
        }
    }

    pub fn cbow_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.cbow_dim,
            window: self.cbow_window,
            negatives: self.cbow_negatives,
            epochs: self.cbow_epochs,
            min_count: self.cbow_min_count,
            learning_rate: self.cbow_learning_rate,
            seed: self.seed.wrapping_add(SEED_CBOW),
            threads: self.cbow_threads,
        }
    }

    pub fn lsa_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.lsa_dim,
            min_count: self.lsa_min_count,
            seed: self.seed.wrapping_add(SEED_LSA),
            ..self.cbow_config()
        }
    }

    pub fn alignment_hyper(&self) -> AlignmentHyper {
        AlignmentHyper {
            epochs: self.alignment_epochs,
            l2: self.alignment_l2,
            seed: self.seed.wrapping_add(SEED_ALIGNMENT),
            alignment: AlignmentConfig {
                cap: self.alignment_cap,
                max_positions_per_char: self.alignment_max_positions,
            },
            ..AlignmentHyper::default()
        }
    }

    pub fn combiner_hyper(&self) -> CombinerHyper {
        CombinerHyper {
            mask: self.feature_mask,
            l2: self.combiner_l2,
            max_iters: self.combiner_max_iters,
            negative_keep: self.negative_keep,
            seed: self.seed.wrapping_add(SEED_COMBINER),
            ..CombinerHyper::default()
        }
    }

    pub fn synthetic_config(&self) -> SyntheticConfig {
        SyntheticConfig {
            n_abbrevs: self.synth_abbrevs,
            n_docs: self.synth_docs,
            ..SyntheticConfig::default()
        }
    }

    pub fn artifacts(&self) -> Artifacts {
        Artifacts {
            dir: self.out.clone(),
        }
    }
}

/// Which model a per-fold artifact belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldTag {
    Fold(usize),
    All,
}

impl std::fmt::Display for FoldTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FoldTag::Fold(k) => write!(f, "fold{k}"),
            FoldTag::All => f.write_str("all"),
        }
    }
}

/// Artifact locations inside the output directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn ground_truth(&self) -> PathBuf {
        self.dir.join("ground_truth.tsv")
    }
    pub fn restricted(&self) -> PathBuf {
        self.dir.join("ground_truth.restricted.tsv")
    }
    pub fn folds(&self) -> PathBuf {
        self.dir.join("folds.tsv")
    }
    pub fn candidates(&self) -> PathBuf {
        self.dir.join("candidates.tsv")
    }
    pub fn embeddings(&self, kind: EmbeddingKind) -> PathBuf {
        self.dir.join(format!("{}.vec", kind.as_str()))
    }
    pub fn alignment(&self, tag: FoldTag) -> PathBuf {
        self.dir.join(format!("alignment.{tag}.tsv"))
    }
    pub fn combiner(&self, mask: FeatureMask, tag: FoldTag) -> PathBuf {
        self.dir.join(format!("combiner.{mask}.{tag}.tsv"))
    }
    pub fn scored_fold(&self, mask: FeatureMask, fold: usize) -> PathBuf {
        self.dir.join(format!("scored.{mask}.fold{fold}.tsv"))
    }
    pub fn scored(&self, mask: FeatureMask) -> PathBuf {
        self.dir.join(format!("scored.{mask}.tsv"))
    }
    pub fn pr_fold(&self, mask: FeatureMask, fold: usize) -> PathBuf {
        self.dir.join(format!("pr.{mask}.fold{fold}.csv"))
    }
    pub fn pr(&self, mask: FeatureMask) -> PathBuf {
        self.dir.join(format!("pr.{mask}.csv"))
    }
    pub fn review(&self, mask: FeatureMask) -> PathBuf {
        self.dir.join(format!("review.{mask}.tsv"))
    }
    pub fn review_report(&self, mask: FeatureMask) -> PathBuf {
        self.dir.join(format!("review_report.{mask}.csv"))
    }
    pub fn fixture_corpus(&self) -> PathBuf {
        self.dir.join("corpus.jsonl")
    }
    pub fn fixture_pairs(&self) -> PathBuf {
        self.dir.join("pairs.tsv")
    }
}

/// What a stage did: its name, the files it wrote, and a JSON summary.
#[derive(Debug, Clone)]
pub struct StageReport {
    pub stage: &'static str,
    pub outputs: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

impl StageReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "stage": self.stage,
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "summary": self.summary,
        })
    }
}

fn header(cfg: &PipelineConfig, stage: &str) -> Vec<String> {
    vec![format!("abbrex {stage} config={}", cfg.hash())]
}

fn require(key: &str, path: Option<&Path>) -> Result<PathBuf> {
    let path = path.ok_or_else(|| Error::MissingInput {
        key: key.into(),
        detail: "not set".into(),
    })?;
    if !path.exists() {
        return Err(Error::MissingInput {
            key: key.into(),
            detail: format!("{} does not exist", path.display()),
        });
    }
    Ok(path.to_path_buf())
}

/// An artifact an earlier stage should have written.
fn require_artifact(path: PathBuf, stage: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingInput {
            key: "out".into(),
            detail: format!("{} not found; run `{stage}` first", path.display()),
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn load_corpus_from(cfg: &PipelineConfig) -> Result<Corpus> {
    let path = require("corpus", cfg.corpus.as_deref())?;
    load_corpus(&path, &cfg.profile()?)
}

pub fn build_gt(cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.validate()?;
    let path = require("pairs", cfg.pairs.as_deref())?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let (records, malformed) = parse_pair_records(&text);
    let (gt, mut stats) = build_ground_truth(records, &cfg.profile()?);
    stats.malformed = malformed;
    let out = cfg.artifacts().ground_truth();
    write_with(&out, |w| gt.write_tsv(w, &header(cfg, "build-gt")))?;
    Ok(StageReport {
        stage: "build-gt",
        outputs: vec![out],
        summary: json!({
            "records": stats.records,
            "accepted_redirect": stats.accepted_redirect,
            "accepted_disambiguation": stats.accepted_disambiguation,
            "rejected": stats.rejected,
            "malformed": stats.malformed,
            "short_forms": gt.num_short_forms(),
            "pairs": gt.num_pairs(),
        }),
    })
}

pub fn restrict_gt(cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.validate()?;
    let art = cfg.artifacts();
    let gt_path = require_artifact(art.ground_truth(), "build-gt")?;
    let corpus = load_corpus_from(cfg)?;
    let gt = GroundTruth::read_tsv(&gt_path)?;
    let index = CorpusIndex::build(&corpus);
    let restricted = restrict_to_cooccurring(&gt, &index, &corpus.profile);
    let folds = split_folds(
        restricted.short_forms(),
        cfg.folds,
        cfg.seed.wrapping_add(SEED_FOLDS),
    )?;
    let h = header(cfg, "restrict-gt");
    write_with(&art.restricted(), |w| restricted.write_tsv(w, &h))?;
    write_with(&art.folds(), |w| folds.write_tsv(w, &h))?;
    Ok(StageReport {
        stage: "restrict-gt",
        outputs: vec![art.restricted(), art.folds()],
        summary: json!({
            "pairs_before": gt.num_pairs(),
            "pairs": restricted.num_pairs(),
            "short_forms": restricted.num_short_forms(),
            "folds": cfg.folds,
        }),
    })
}

pub fn candidates(cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.validate()?;
    let corpus = load_corpus_from(cfg)?;
    let index = CorpusIndex::build(&corpus);
    let occurrences: Vec<_> = corpus
        .documents
        .iter()
        .flat_map(|d| extract_parenthetical(d, &corpus.profile))
        .collect();
    let n_occ = occurrences.len();
    let window = extract_window_candidates(&corpus, &index, &cfg.window_config());
    let n_window = window.len();
    let cands = aggregate(occurrences, window, &corpus.profile);
    let out = cfg.artifacts().candidates();
    write_with(&out, |w| write_candidates(w, &cands, &header(cfg, "candidates")))?;
    Ok(StageReport {
        stage: "candidates",
        outputs: vec![out],
        summary: json!({
            "documents": corpus.len(),
            "parenthetical_occurrences": n_occ,
            "window_candidates": n_window,
            "candidates": cands.len(),
        }),
    })
}

pub fn train_embeddings(cfg: &PipelineConfig, kind: EmbeddingKind) -> Result<StageReport> {
    cfg.validate()?;
    let corpus = load_corpus_from(cfg)?;
    let model = match kind {
        EmbeddingKind::Cbow => train_cbow(&sentence_sequences(&corpus), &cfg.cbow_config())?,
        EmbeddingKind::Lsa => train_lsa(&document_sequences(&corpus), &cfg.lsa_config())?,
    };
    let out = cfg.artifacts().embeddings(kind);
    let stage = "train-embeddings";
    let mut footer = header(cfg, stage);
    footer.push(format!("kind={}", kind.as_str()));
    write_with(&out, |w| model.write_text(w, &footer))?;
    Ok(StageReport {
        stage,
        outputs: vec![out],
        summary: json!({
            "kind": kind.as_str(),
            "vocabulary": model.vocab_size(),
            "dim": model.dim(),
        }),
    })
}

/// Inputs shared by the supervised stages.
pub struct Workspace {
    pub profile: LanguageProfile,
    pub gt: GroundTruth,
    pub folds: FoldAssignment,
    pub candidates: Vec<ScoredCandidate>,
}

impl Workspace {
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let art = cfg.artifacts();
        let gt = GroundTruth::read_tsv(&require_artifact(art.restricted(), "restrict-gt")?)?;
        let folds = FoldAssignment::read_tsv(&require_artifact(art.folds(), "restrict-gt")?)?;
        let candidates = read_candidates(&require_artifact(art.candidates(), "candidates")?)?;
        Ok(Self {
            profile: cfg.profile()?,
            gt,
            folds,
            candidates,
        })
    }

    /// Fold of a candidate's short-form; `None` outside the ground truth.
    pub fn fold_of(&self, cand: &ScoredCandidate) -> Option<usize> {
        self.folds.fold_of(&cand.short_form)
    }

    /// Indices of candidates a model for `tag` trains on.
    pub fn train_indices(&self, tag: FoldTag) -> Vec<usize> {
        (0..self.candidates.len())
            .filter(|&i| match (self.fold_of(&self.candidates[i]), tag) {
                (None, _) => false,
                (Some(_), FoldTag::All) => true,
                (Some(f), FoldTag::Fold(k)) => f != k,
            })
            .collect()
    }

    /// Indices of candidates scored as the test side of fold `k`.
    pub fn test_indices(&self, k: usize) -> Vec<usize> {
        (0..self.candidates.len())
            .filter(|&i| self.fold_of(&self.candidates[i]) == Some(k))
            .collect()
    }

    pub fn label(&self, i: usize) -> bool {
        let c = &self.candidates[i];
        self.gt.contains(&c.short_form, &c.long_form)
    }

    pub fn tags(&self) -> Vec<FoldTag> {
        (0..self.folds.k)
            .map(FoldTag::Fold)
            .chain([FoldTag::All])
            .collect()
    }

    /// Alignment feature sets for the given candidates.
    fn feature_sets(&self, idx: &[usize], cfg: &AlignmentConfig, threads: usize) -> Vec<FeatureSet> {
        let work = |i: &usize| {
            let c = &self.candidates[*i];
            FeatureSet::new(&c.short_form, &self.profile.long_form_tokens(&c.long_form), cfg)
        };
        parallel_map(idx, threads, work)
    }
}

fn parallel_map<T, U, F>(items: &[T], threads: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    if threads <= 1 || items.len() < 2 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(f).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker"))
            .collect()
    })
}

pub fn train_alignment(cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.validate()?;
    let ws = Workspace::load(cfg)?;
    let hyper = cfg.alignment_hyper();
    let all = ws.train_indices(FoldTag::All);
    let sets = ws.feature_sets(&all, &hyper.alignment, cfg.threads);
    let truncated = sets.iter().filter(|s| s.truncated).count();
    let art = cfg.artifacts();
    let h = header(cfg, "train-alignment");
    let mut outputs = Vec::new();
    let mut losses = Vec::new();
    for tag in ws.tags() {
        let keep: BTreeSet<usize> = ws.train_indices(tag).into_iter().collect();
        let data: Vec<PreparedExample> = all
            .iter()
            .zip(&sets)
            .filter(|(i, _)| keep.contains(i))
            .map(|(&i, s)| PreparedExample {
                features: s.clone(),
                label: ws.label(i),
            })
            .collect();
        let fit = train_prepared(&data, &hyper)?;
        let path = art.alignment(tag);
        write_with(&path, |w| fit.model.write_tsv(w, &h))?;
        losses.push(json!({ "model": tag.to_string(), "examples": data.len(),
            "final_loss": fit.loss_curve.last().copied() }));
        outputs.push(path);
    }
    Ok(StageReport {
        stage: "train-alignment",
        outputs,
        summary: json!({ "models": losses, "truncated_enumerations": truncated }),
    })
}

/// Feature vectors for the given candidates, with alignment scores from
/// `alignment` when the mask uses them.
pub struct FeatureTable {
    base: Vec<FeatureVector>,
    sets: Option<Vec<FeatureSet>>,
}

impl FeatureTable {
    pub fn build(cfg: &PipelineConfig, ws: &Workspace, idx: &[usize]) -> Result<Self> {
        let mask = cfg.feature_mask;
        let art = cfg.artifacts();
        let corpus = load_corpus_from(cfg)?;
        let index = CorpusIndex::build(&corpus);
        let load = |kind| -> Result<Option<EmbeddingModel>> {
            if mask < FeatureMask::Embeddings {
                return Ok(None);
            }
            let path = require_artifact(art.embeddings(kind), "train-embeddings")?;
            EmbeddingModel::read_text(&path, kind).map(Some)
        };
        let cbow = load(EmbeddingKind::Cbow)?;
        let lsa = load(EmbeddingKind::Lsa)?;
        let align_cfg = cfg.alignment_hyper().alignment;
        let ctx = FeatureContext {
            profile: &ws.profile,
            index: &index,
            cbow: cbow.as_ref(),
            lsa: lsa.as_ref(),
            alignment: None,
            alignment_config: &align_cfg,
        };
        let cands: Vec<ScoredCandidate> = idx.iter().map(|&i| ws.candidates[i].clone()).collect();
        let base = ctx.assemble_all(&cands, cfg.threads);
        let sets = (mask >= FeatureMask::Alignment).then(|| ws.feature_sets(idx, &align_cfg, cfg.threads));
        Ok(Self { base, sets })
    }

    pub fn vector(&self, row: usize, alignment: Option<&AlignmentModel>) -> FeatureVector {
        let mut v = self.base[row];
        if let (Some(sets), Some(m)) = (&self.sets, alignment) {
            v.alignment_ss = sets[row].best(m).0;
        }
        v
    }
}

fn load_alignment(cfg: &PipelineConfig, tag: FoldTag) -> Result<Option<AlignmentModel>> {
    if cfg.feature_mask < FeatureMask::Alignment {
        return Ok(None);
    }
    let path = require_artifact(cfg.artifacts().alignment(tag), "train-alignment")?;
    AlignmentModel::read_tsv(&path).map(Some)
}

pub fn train(cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.validate()?;
    let ws = Workspace::load(cfg)?;
    let mask = cfg.feature_mask;
    let all = ws.train_indices(FoldTag::All);
    let table = FeatureTable::build(cfg, &ws, &all)?;
    let hyper = cfg.combiner_hyper();
    let h = header(cfg, "train");
    let mut outputs = Vec::new();
    let mut models = Vec::new();
    for tag in ws.tags() {
        let align = load_alignment(cfg, tag)?;
        let keep: BTreeSet<usize> = ws.train_indices(tag).into_iter().collect();
        let mut rng_keep = negative_filter(&hyper);
        let data: Vec<_> = all
            .iter()
            .enumerate()
            .filter(|(_, i)| keep.contains(i))
            .map(|(row, &i)| (table.vector(row, align.as_ref()).to_array(), ws.label(i)))
            .filter(|(_, y)| rng_keep(*y))
            .collect();
        let fit = fit_arrays(&data, &hyper)?;
        let path = cfg.artifacts().combiner(mask, tag);
        write_with(&path, |w| fit.model.write_tsv(w, &h))?;
        models.push(json!({ "model": tag.to_string(), "examples": data.len(),
            "loss": fit.loss, "iterations": fit.iterations }));
        outputs.push(path);
    }
    Ok(StageReport {
        stage: "train",
        outputs,
        summary: json!({ "feature_mask": mask.as_str(), "models": models }),
    })
}

/// Seeded keep/drop decision for optional negative downsampling.
fn negative_filter(hyper: &CombinerHyper) -> impl FnMut(bool) -> bool {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(hyper.seed);
    let keep = hyper.negative_keep;
    move |label| label || keep >= 1.0 || rng.random::<f64>() < keep
}

pub fn score(cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.validate()?;
    let ws = Workspace::load(cfg)?;
    let mask = cfg.feature_mask;
    let art = cfg.artifacts();
    let everything: Vec<usize> = (0..ws.candidates.len()).collect();
    let table = FeatureTable::build(cfg, &ws, &everything)?;
    let h = header(cfg, "score");
    let load_combiner = |tag| CombinerModel::read_tsv(&require_artifact(art.combiner(mask, tag), "train")?);

    let mut outputs = Vec::new();
    let score_rows = |rows: &[usize], model: &CombinerModel, align: Option<&AlignmentModel>| {
        let mut pairs: Vec<ScoredPair> = rows
            .iter()
            .map(|&i| ScoredPair {
                short_form: ws.candidates[i].short_form.clone(),
                long_form: ws.candidates[i].long_form.clone(),
                score: combine(model, &table.vector(i, align)),
            })
            .collect();
        rank(&mut pairs);
        pairs
    };
    for k in 0..ws.folds.k {
        let model = load_combiner(FoldTag::Fold(k))?;
        check_mask(&model, mask)?;
        let align = load_alignment(cfg, FoldTag::Fold(k))?;
        let pairs = score_rows(&ws.test_indices(k), &model, align.as_ref());
        let path = art.scored_fold(mask, k);
        write_with(&path, |w| write_scored(w, &pairs, &h))?;
        outputs.push(path);
    }
    let model = load_combiner(FoldTag::All)?;
    check_mask(&model, mask)?;
    let align = load_alignment(cfg, FoldTag::All)?;
    let pairs = score_rows(&everything, &model, align.as_ref());
    let path = art.scored(mask);
    write_with(&path, |w| write_scored(w, &pairs, &h))?;
    outputs.push(path);
    Ok(StageReport {
        stage: "score",
        outputs,
        summary: json!({ "feature_mask": mask.as_str(), "scored": pairs.len() }),
    })
}

fn check_mask(model: &CombinerModel, mask: FeatureMask) -> Result<()> {
    if model.mask > mask {
        return Err(Error::Config(format!(
            "combiner uses `{}` features but the feature mask is `{mask}`",
            model.mask
        )));
    }
    Ok(())
}

/// Cross-validated evaluation of one feature mask.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub mask: FeatureMask,
    /// Area under the fold-averaged curve.
    pub auc: f64,
    pub fold_aucs: Vec<f64>,
}

pub fn evaluate(cfg: &PipelineConfig) -> Result<(StageReport, Evaluation)> {
    cfg.validate()?;
    let art = cfg.artifacts();
    let mask = cfg.feature_mask;
    let gt = GroundTruth::read_tsv(&require_artifact(art.restricted(), "restrict-gt")?)?;
    let folds = FoldAssignment::read_tsv(&require_artifact(art.folds(), "restrict-gt")?)?;
    let h = header(cfg, "evaluate");
    let mut curves = Vec::new();
    let mut outputs = Vec::new();
    for k in 0..folds.k {
        let ranked = read_scored(&require_artifact(art.scored_fold(mask, k), "score")?)?;
        let keep: BTreeSet<String> = folds.members(k).map(String::from).collect();
        let curve = pr_curve(&ranked, &gt.restrict_to_short_forms(&keep))?;
        let path = art.pr_fold(mask, k);
        write_with(&path, |w| curve.write_csv(w, &h))?;
        outputs.push(path);
        curves.push(curve);
    }
    let avg = average_curves(&curves);
    let path = art.pr(mask);
    write_with(&path, |w| avg.write_csv(w, &h))?;
    outputs.push(path);
    let eval = Evaluation {
        mask,
        auc: avg.auc,
        fold_aucs: avg.fold_aucs.clone(),
    };
    let report = StageReport {
        stage: "evaluate",
        outputs,
        summary: json!({ "feature_mask": mask.as_str(), "auc": avg.auc, "fold_aucs": avg.fold_aucs }),
    };
    Ok((report, eval))
}

/// Test-fold rankings merged into one cross-validated ranking.
fn merged_ranking(cfg: &PipelineConfig, folds: &FoldAssignment) -> Result<Vec<ScoredPair>> {
    let art = cfg.artifacts();
    let mut ranked = Vec::new();
    for k in 0..folds.k {
        ranked.extend(read_scored(&require_artifact(
            art.scored_fold(cfg.feature_mask, k),
            "score",
        )?)?);
    }
    rank(&mut ranked);
    Ok(ranked)
}

pub fn sample_fps(cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.validate()?;
    let art = cfg.artifacts();
    let gt = GroundTruth::read_tsv(&require_artifact(art.restricted(), "restrict-gt")?)?;
    let folds = FoldAssignment::read_tsv(&require_artifact(art.folds(), "restrict-gt")?)?;
    let ranked = merged_ranking(cfg, &folds)?;
    let sheet = sample_false_positives(
        &ranked,
        &gt,
        cfg.sample_bins,
        cfg.sample_per_bin,
        cfg.seed.wrapping_add(SEED_SAMPLE),
    )?;
    let path = art.review(cfg.feature_mask);
    write_with(&path, |w| write_sheet(w, &sheet, &header(cfg, "sample-fps")))?;
    Ok(StageReport {
        stage: "sample-fps",
        outputs: vec![path],
        summary: json!({ "rows": sheet.rows.len(), "bins": cfg.sample_bins }),
    })
}

/// Reads a filled-in sheet (by default the one `sample-fps` wrote) and
/// reports corrected precision per recall bin.
pub fn apply_verdicts(cfg: &PipelineConfig, sheet: Option<&Path>) -> Result<StageReport> {
    cfg.validate()?;
    let art = cfg.artifacts();
    let sheet_path = match sheet {
        Some(p) => require("sheet", Some(p))?,
        None => require_artifact(art.review(cfg.feature_mask), "sample-fps")?,
    };
    let gt = GroundTruth::read_tsv(&require_artifact(art.restricted(), "restrict-gt")?)?;
    let folds = FoldAssignment::read_tsv(&require_artifact(art.folds(), "restrict-gt")?)?;
    let ranked = merged_ranking(cfg, &folds)?;
    let bins = bin_verdicts(&read_sheet(&sheet_path)?, &ranked, &gt, cfg.sample_bins)?;
    let path = art.review_report(cfg.feature_mask);
    write_with(&path, |w| write_bin_report(w, &bins, &header(cfg, "apply-verdicts")))?;
    let judged: usize = bins.iter().map(|b| b.correct + b.incorrect).sum();
    Ok(StageReport {
        stage: "apply-verdicts",
        outputs: vec![path],
        summary: json!({ "judged": judged }),
    })
}

pub fn synth_fixture(cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.validate()?;
    let art = cfg.artifacts();
    let fx = generate_synthetic_fixture(cfg.seed.wrapping_add(SEED_FIXTURE), &cfg.synthetic_config());
    write_with(&art.fixture_corpus(), |w| w.write_all(fx.corpus_jsonl.as_bytes()))?;
    write_with(&art.fixture_pairs(), |w| {
        for h in header(cfg, "synth-fixture") {
            writeln!(w, "# {h}")?;
        }
        w.write_all(fx.pair_records.as_bytes())
    })?;
    Ok(StageReport {
        stage: "synth-fixture",
        outputs: vec![art.fixture_corpus(), art.fixture_pairs()],
        summary: json!({
            "documents": fx.corpus_jsonl.lines().count(),
            "planted_pairs": fx.planted.len(),
        }),
    })
}

/// Every stage from ground truth to evaluation, once per mask.
pub fn run_all(cfg: &PipelineConfig, masks: &[FeatureMask]) -> Result<Vec<Evaluation>> {
    build_gt(cfg)?;
    restrict_gt(cfg)?;
    candidates(cfg)?;
    let top = masks.iter().copied().max().unwrap_or(FeatureMask::Candidates);
    if top >= FeatureMask::Embeddings {
        train_embeddings(cfg, EmbeddingKind::Cbow)?;
        train_embeddings(cfg, EmbeddingKind::Lsa)?;
    }
    if top >= FeatureMask::Alignment {
        train_alignment(cfg)?;
    }
    let mut evals = Vec::new();
    for &mask in masks {
        let c = PipelineConfig {
            feature_mask: mask,
            ..cfg.clone()
        };
        train(&c)?;
        score(&c)?;
        evals.push(evaluate(&c)?.1);
    }
    Ok(evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let c: PipelineConfig = toml::from_str("lang = \"ja\"\nseed = 9\nfeature_mask = \"+embeddings\"").unwrap();
        assert_eq!(c.lang, "ja");
        assert_eq!(c.seed, 9);
        assert_eq!(c.feature_mask, FeatureMask::Embeddings);
        assert_eq!(c.folds, 3);
        assert!(toml::from_str::<PipelineConfig>("bogus = 1").is_err());
    }

    #[test]
    fn hash_ignores_paths() {
        let a = PipelineConfig::default();
        let b = PipelineConfig {
            out: "elsewhere".into(),
            corpus: Some("c.jsonl".into()),
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        let c = PipelineConfig { seed: 2, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn missing_corpus_names_the_key() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            out: dir.path().into(),
            corpus: Some(dir.path().join("absent.jsonl")),
            ..PipelineConfig::default()
        };
        let err = candidates(&cfg).unwrap_err();
        assert_eq!(err.key(), Some("corpus"));
        let err = candidates(&PipelineConfig { corpus: None, ..cfg }).unwrap_err();
        assert_eq!(err.key(), Some("corpus"));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = PipelineConfig {
            folds: 1,
            ..PipelineConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = PipelineConfig {
            lang: String::new(),
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
