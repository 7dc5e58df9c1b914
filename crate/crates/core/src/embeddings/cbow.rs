//! Continuous bag-of-words with negative sampling.
//!
//! For a focus token the input vectors of the symmetric context window are
//! averaged into `h`, and the loss is
//!
//! ```text
//! -ln σ(h·o_focus) - Σ_neg ln σ(-h·o_neg)
//! ```
//!
//! with negatives drawn from the unigram distribution raised to 3/4. The
//! learned model is the input-vector table.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{EmbeddingKind, EmbeddingModel};
use crate::util::{neg_log_sigmoid, sigmoid};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    /// Linearly decayed to `learning_rate * 1e-4` over training.
    pub learning_rate: f64,
    pub seed: u64,
    /// Worker threads; above 1 each epoch trains shards on copies of the
    /// parameters and averages them.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 5,
            learning_rate: 0.05,
            seed: 1,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        let counts = [
            ("dim", self.dim),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
            ("min_count", self.min_count),
            ("threads", self.threads),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Input and output vector tables, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowParams {
    pub dim: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl CbowParams {
    pub fn input_row(&self, id: usize) -> &[f64] {
        &self.input[id * self.dim..(id + 1) * self.dim]
    }

    pub fn output_row(&self, id: usize) -> &[f64] {
        &self.output[id * self.dim..(id + 1) * self.dim]
    }

    fn context_mean(&self, context: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim];
        for &c in context {
            for (acc, x) in h.iter_mut().zip(self.input_row(c)) {
                *acc += x;
            }
        }
        let n = context.len() as f64;
        h.iter_mut().for_each(|x| *x /= n);
        h
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss of one `(context, focus, negatives)` example.
pub fn example_loss(p: &CbowParams, context: &[usize], focus: usize, negatives: &[usize]) -> f64 {
    let h = p.context_mean(context);
    neg_log_sigmoid(dot(&h, p.output_row(focus)))
        + negatives
            .iter()
            .map(|&n| neg_log_sigmoid(-dot(&h, p.output_row(n))))
            .sum::<f64>()
}

/// Gradient rows of [`example_loss`]. Ids may repeat; rows for a repeated
/// id add up.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleGradient {
    pub input: Vec<(usize, Vec<f64>)>,
    pub output: Vec<(usize, Vec<f64>)>,
}

pub fn example_gradient(
    p: &CbowParams,
    context: &[usize],
    focus: usize,
    negatives: &[usize],
) -> ExampleGradient {
    let h = p.context_mean(context);
    let mut grad_h = vec![0.0; p.dim];
    let mut output = Vec::with_capacity(negatives.len() + 1);
    let targets = std::iter::once((focus, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (id, label) in targets {
        let o = p.output_row(id);
        let r = sigmoid(dot(&h, o)) - label;
        for (g, x) in grad_h.iter_mut().zip(o) {
            *g += r * x;
        }
        output.push((id, h.iter().map(|x| r * x).collect()));
    }
    let n = context.len() as f64;
    let per_ctx: Vec<f64> = grad_h.iter().map(|g| g / n).collect();
    ExampleGradient {
        input: context.iter().map(|&c| (c, per_ctx.clone())).collect(),
        output,
    }
}

fn apply(p: &mut CbowParams, g: &ExampleGradient, lr: f64) {
    let dim = p.dim;
    for (id, row) in &g.output {
        for (w, d) in p.output[id * dim..(id + 1) * dim].iter_mut().zip(row) {
            *w -= lr * d;
        }
    }
    for (id, row) in &g.input {
        for (w, d) in p.input[id * dim..(id + 1) * dim].iter_mut().zip(row) {
            *w -= lr * d;
        }
    }
}

struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, usize>,
    counts: Vec<u64>,
}

fn build_vocab(sequences: &[Vec<String>], min_count: usize) -> Result<Vocab> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in sequences {
        for t in s {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count as u64)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
    let ids = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Ok(Vocab {
        words,
        ids,
        counts: kept.iter().map(|(_, c)| *c).collect(),
    })
}

/// Trains on token sequences (typically sentences).
pub fn train_cbow(sequences: &[Vec<String>], cfg: &TrainConfig) -> Result<EmbeddingModel> {
    cfg.validate()?;
    let vocab = build_vocab(sequences, cfg.min_count)?;
    let encoded: Vec<Vec<usize>> = sequences
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.ids.get(t).copied()).collect())
        .filter(|s: &Vec<usize>| s.len() > 1)
        .collect();

    let dim = cfg.dim;
    let v = vocab.words.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = CbowParams {
        dim,
        input: (0..v * dim)
            .map(|_| (rng.random::<f64>() - 0.5) / dim as f64)
            .collect(),
        output: vec![0.0; v * dim],
    };
    let noise = WeightedIndex::new(vocab.counts.iter().map(|&c| (c as f64).powf(0.75)))
        .expect("non-empty positive weights");

    let total: usize = encoded.iter().map(Vec::len).sum::<usize>() * cfg.epochs;
    let mut seen = 0usize;
    for epoch in 0..cfg.epochs {
        if cfg.threads <= 1 {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((epoch as u64 + 1) << 32));
            run_shard(&mut params, &encoded, cfg, &noise, &mut r, seen, total);
        } else {
            let shards: Vec<&[Vec<usize>]> = encoded
                .chunks(encoded.len().div_ceil(cfg.threads).max(1))
                .collect();
            let n_shards = shards.len().max(1);
            let results: Vec<CbowParams> = std::thread::scope(|scope| {
                let handles: Vec<_> = shards
                    .iter()
                    .enumerate()
                    .map(|(t, &shard)| {
                        let mut local = params.clone();
                        let noise = &noise;
                        scope.spawn(move || {
                            let seed = cfg.seed ^ ((epoch as u64 + 1) << 32) ^ (t as u64 + 1);
                            let mut r = ChaCha8Rng::seed_from_u64(seed);
                            let (start, shard_total) = (seen / n_shards, total / n_shards);
                            run_shard(&mut local, shard, cfg, noise, &mut r, start, shard_total);
                            local
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker")).collect()
            });
            let k = results.len() as f64;
            for (i, w) in params.input.iter_mut().enumerate() {
                *w = results.iter().map(|r| r.input[i]).sum::<f64>() / k;
            }
            for (i, w) in params.output.iter_mut().enumerate() {
                *w = results.iter().map(|r| r.output[i]).sum::<f64>() / k;
            }
        }
        seen += encoded.iter().map(Vec::len).sum::<usize>();
    }

    Ok(EmbeddingModel::new(
        EmbeddingKind::Cbow,
        dim,
        vocab.words,
        params.input,
    ))
}

fn run_shard(
    params: &mut CbowParams,
    sequences: &[Vec<usize>],
    cfg: &TrainConfig,
    noise: &WeightedIndex<f64>,
    rng: &mut ChaCha8Rng,
    mut seen: usize,
    total: usize,
) {
    let mut context = Vec::with_capacity(2 * cfg.window);
    let mut negatives = Vec::with_capacity(cfg.negatives);
    for seq in sequences {
        for (i, &focus) in seq.iter().enumerate() {
            let progress = seen as f64 / total.max(1) as f64;
            let lr = cfg.learning_rate * (1.0 - progress).max(1e-4);
            seen += 1;

            context.clear();
            let lo = i.saturating_sub(cfg.window);
            let hi = (i + cfg.window).min(seq.len() - 1);
            context.extend((lo..=hi).filter(|&j| j != i).map(|j| seq[j]));
            if context.is_empty() {
                continue;
            }
            negatives.clear();
            for _ in 0..cfg.negatives {
                let n = noise.sample(rng);
                if n != focus {
                    negatives.push(n);
                }
            }
            let g = example_gradient(params, &context, focus, &negatives);
            apply(params, &g, lr);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(text: &str) -> Vec<Vec<String>> {
        text.split('.')
            .map(|s| s.split_whitespace().map(String::from).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect()
    }

    #[test]
    fn empty_vocabulary() {
        let cfg = TrainConfig {
            min_count: 3,
            ..TrainConfig::default()
        };
        assert!(matches!(train_cbow(&seqs("a b. c d."), &cfg), Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn rare_tokens_are_out_of_vocabulary() {
        let cfg = TrainConfig {
            min_count: 2,
            dim: 4,
            epochs: 1,
            ..TrainConfig::default()
        };
        let m = train_cbow(&seqs("a b c. a b d. a b c."), &cfg).unwrap();
        assert!(m.contains("a") && m.contains("c"));
        assert!(!m.contains("d"));
    }

    #[test]
    fn deterministic_with_seed() {
        let text = "the cat sat on the mat. the dog sat on the rug. a cat and a dog.";
        let cfg = TrainConfig {
            min_count: 1,
            dim: 8,
            epochs: 3,
            ..TrainConfig::default()
        };
        let a = train_cbow(&seqs(text), &cfg).unwrap();
        let b = train_cbow(&seqs(text), &cfg).unwrap();
        assert_eq!(a, b);
        let c = train_cbow(&seqs(text), &TrainConfig { seed: 99, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_config() {
        let cfg = TrainConfig {
            negatives: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(train_cbow(&seqs("a b"), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn parallel_mode_trains() {
        let text = "the cat sat on the mat. the dog sat on the rug. a cat and a dog.".repeat(10);
        let cfg = TrainConfig {
            min_count: 1,
            dim: 8,
            epochs: 2,
            threads: 3,
            ..TrainConfig::default()
        };
        let m = train_cbow(&seqs(&text), &cfg).unwrap();
        assert_eq!(m.vocab_size(), 9);
    }
}
