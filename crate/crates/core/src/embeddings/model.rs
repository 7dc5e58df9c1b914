use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::util::{fmt_sig, logit};
use crate::{Error, Result};

/// Similarities are clamped to `[-1 + SIM_CLAMP, 1 - SIM_CLAMP]` before the
/// logit transform.
pub const SIM_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    Cbow,
    Lsa,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Cbow => "cbow",
            EmbeddingKind::Lsa => "lsa",
        }
    }
}

/// Token → dense vector lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub kind: EmbeddingKind,
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
}

impl EmbeddingModel {
    /// Builds a model from rows of `vectors` (row-major, `dim` wide).
    /// Zero-norm rows are dropped so every stored token has a direction.
    pub fn new(kind: EmbeddingKind, dim: usize, words: Vec<String>, vectors: Vec<f64>) -> Self {
        assert_eq!(words.len() * dim, vectors.len(), "vector table shape");
        let mut kept_words = Vec::with_capacity(words.len());
        let mut kept = Vec::with_capacity(vectors.len());
        for (w, row) in words.into_iter().zip(vectors.chunks(dim.max(1))) {
            if dim > 0 && row.iter().any(|x| *x != 0.0) {
                kept_words.push(w);
                kept.extend_from_slice(row);
            }
        }
        let index = kept_words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Self {
            kind,
            dim,
            words: kept_words,
            index,
            vectors: kept,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(&token.to_lowercase())
    }

    /// Vector of a token, looked up lowercased.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        let i = *self.index.get(&token.to_lowercase())?;
        Some(&self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        cosine(self.get(a)?, self.get(b)?)
    }

    /// Text format: `<|V|> <d>` then `token v1 ... vd` per line, 6
    /// significant digits. Extra lines are written as `#` comments at the end.
    pub fn write_text<W: Write>(&self, mut w: W, footer: &[String]) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.words.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for x in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                write!(w, " {}", fmt_sig(*x, 6))?;
            }
            writeln!(w)?;
        }
        for f in footer {
            writeln!(w, "# {f}")?;
        }
        Ok(())
    }

    pub fn read_text(path: &Path, kind: EmbeddingKind) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path.display().to_string();
        let mut lines = BufReader::new(file).lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, Ok(l))) if l.starts_with('#') || l.trim().is_empty() => continue,
                Some((_, Ok(l))) => break l,
                Some((_, Err(e))) => return Err(Error::io(path, e)),
                None => return Err(Error::parse(name, 1, "missing header")),
            }
        };
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| Error::parse(&name, 1, "bad header")))
            .collect::<Result<_>>()?;
        let [count, dim] = dims[..] else {
            return Err(Error::parse(name, 1, "header must be `<|V|> <d>`"));
        };
        let mut words = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count * dim);
        for (n, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default().to_string();
            let row: Vec<f64> = parts
                .map(|x| x.parse().map_err(|_| Error::parse(&name, n + 1, "bad number")))
                .collect::<Result<_>>()?;
            if row.len() != dim {
                return Err(Error::parse(&name, n + 1, format!("expected {dim} values")));
            }
            words.push(word);
            vectors.extend(row);
        }
        if words.len() != count {
            return Err(Error::parse(
                name,
                0,
                format!("header promises {count} vectors, found {}", words.len()),
            ));
        }
        Ok(Self::new(kind, dim, words, vectors))
    }
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (na > 0.0 && nb > 0.0).then(|| (dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemanticFeatures {
    pub sim: Option<f64>,
    pub exp_sim: Option<f64>,
    pub logit_sim: Option<f64>,
    pub missing: bool,
}

impl SemanticFeatures {
    pub const MISSING: SemanticFeatures = SemanticFeatures {
        sim: None,
        exp_sim: None,
        logit_sim: None,
        missing: true,
    };

    pub fn from_similarity(sim: f64) -> Self {
        let clamped = sim.clamp(-1.0 + SIM_CLAMP, 1.0 - SIM_CLAMP);
        Self {
            sim: Some(sim),
            exp_sim: Some(sim.exp()),
            logit_sim: Some(logit((clamped + 1.0) / 2.0)),
            missing: false,
        }
    }
}

/// Cosine between the short-form vector and the average of the
/// in-vocabulary long-form token vectors.
pub fn semantic_features<S: AsRef<str>>(
    model: &EmbeddingModel,
    sf: &str,
    lf: &[S],
) -> SemanticFeatures {
    let Some(sigma) = model.get(sf) else {
        return SemanticFeatures::MISSING;
    };
    let mut lambda = vec![0.0; model.dim()];
    let mut found = 0usize;
    for tok in lf {
        if let Some(v) = model.get(tok.as_ref()) {
            for (acc, x) in lambda.iter_mut().zip(v) {
                *acc += x;
            }
            found += 1;
        }
    }
    if found == 0 {
        return SemanticFeatures::MISSING;
    }
    for x in &mut lambda {
        *x /= found as f64;
    }
    match cosine(sigma, &lambda) {
        Some(sim) => SemanticFeatures::from_similarity(sim),
        None => SemanticFeatures::MISSING,
    }
}
