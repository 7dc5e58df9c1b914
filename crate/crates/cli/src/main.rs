//! `abbrex`: run one pipeline stage per invocation.
//!
//! On success the stage prints a one-line JSON report to stdout. On failure
//! it prints a one-line JSON error to stderr and exits with status 1 (2 for
//! usage errors).

use std::path::PathBuf;
use std::process::ExitCode;

use abbrex::embeddings::EmbeddingKind;
use abbrex::pipeline::{self, PipelineConfig, StageReport};
use abbrex::scorer::FeatureMask;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "abbrex", version, about = "Abbreviation expansion mining pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Language code (`en`, `de`, `ja`, ...).
    #[arg(long, global = true)]
    lang: Option<String>,
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// candidates | +embeddings | +alignment
    #[arg(long, global = true)]
    feature_mask: Option<String>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Corpus: a JSONL file or a directory of .txt files.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Pair-record TSV (short_form, long_form, redirect|disambig).
    #[arg(long, global = true)]
    pairs: Option<PathBuf>,
    /// Worker threads for feature assembly.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Cbow,
    Lsa,
}

#[derive(Subcommand)]
enum Command {
    /// Filter pair records into the ground truth.
    BuildGt,
    /// Keep ground-truth pairs that co-occur in the corpus; assign folds.
    RestrictGt,
    /// Extract candidate pairs from the corpus.
    Candidates,
    /// Train token embeddings.
    TrainEmbeddings {
        #[arg(long, value_enum)]
        kind: Kind,
    },
    /// Train the alignment scorer per fold.
    TrainAlignment,
    /// Train the combiner per fold.
    Train,
    /// Score candidates with the trained combiners.
    Score,
    /// Pseudo-precision/recall curves and AUC.
    Evaluate,
    /// Sample measured false positives for manual review.
    SampleFps,
    /// Corrected precision per recall bin from a reviewed sheet.
    ApplyVerdicts {
        /// Filled-in review sheet; defaults to the one `sample-fps` wrote.
        #[arg(long)]
        sheet: Option<PathBuf>,
    },
    /// Write a seeded synthetic corpus and pair records.
    SynthFixture,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BuildGt => "build-gt",
            Command::RestrictGt => "restrict-gt",
            Command::Candidates => "candidates",
            Command::TrainEmbeddings { .. } => "train-embeddings",
            Command::TrainAlignment => "train-alignment",
            Command::Train => "train",
            Command::Score => "score",
            Command::Evaluate => "evaluate",
            Command::SampleFps => "sample-fps",
            Command::ApplyVerdicts { .. } => "apply-verdicts",
            Command::SynthFixture => "synth-fixture",
        }
    }
}

/// A failure with the flag it is attributable to.
struct Failure {
    flag: Option<String>,
    message: String,
}

impl From<abbrex::Error> for Failure {
    fn from(e: abbrex::Error) -> Self {
        Failure {
            flag: e.key().map(|k| format!("--{k}")),
            message: e.to_string(),
        }
    }
}

fn resolve(common: &Common) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| Failure {
            flag: Some("--config".into()),
            message: e.to_string(),
        })?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &common.lang {
        cfg.lang = v.clone();
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = &common.feature_mask {
        cfg.feature_mask = v.parse::<FeatureMask>().map_err(|e| Failure {
            flag: Some("--feature-mask".into()),
            message: e.to_string(),
        })?;
    }
    if let Some(v) = &common.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &common.corpus {
        cfg.corpus = Some(v.clone());
    }
    if let Some(v) = &common.pairs {
        cfg.pairs = Some(v.clone());
    }
    if let Some(v) = common.threads {
        cfg.threads = v;
    }
    Ok(cfg)
}

fn run(command: &Command, cfg: &PipelineConfig) -> Result<StageReport, Failure> {
    let report = match command {
        Command::BuildGt => pipeline::build_gt(cfg)?,
        Command::RestrictGt => pipeline::restrict_gt(cfg)?,
        Command::Candidates => pipeline::candidates(cfg)?,
        Command::TrainEmbeddings { kind } => {
            let kind = match kind {
                Kind::Cbow => EmbeddingKind::Cbow,
                Kind::Lsa => EmbeddingKind::Lsa,
            };
            pipeline::train_embeddings(cfg, kind)?
        }
        Command::TrainAlignment => pipeline::train_alignment(cfg)?,
        Command::Train => pipeline::train(cfg)?,
        Command::Score => pipeline::score(cfg)?,
        Command::Evaluate => pipeline::evaluate(cfg)?.0,
        Command::SampleFps => pipeline::sample_fps(cfg)?,
        Command::ApplyVerdicts { sheet } => pipeline::apply_verdicts(cfg, sheet.as_deref())?,
        Command::SynthFixture => pipeline::synth_fixture(cfg)?,
    };
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = cli.command.name();
    match resolve(&cli.common).and_then(|cfg| run(&cli.command, &cfg)) {
        Ok(report) => {
            println!("{}", report.to_json());
            ExitCode::SUCCESS
        }
        Err(f) => {
            let line = json!({ "stage": stage, "flag": f.flag, "error": f.message });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
