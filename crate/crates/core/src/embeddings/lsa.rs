//! Latent semantic analysis over a log-weighted term-by-document matrix.

use std::collections::HashMap;

use super::model::{EmbeddingKind, EmbeddingModel};
use super::svd::{randomized_svd, CsrMatrix, SvdConfig};
use super::TrainConfig;
use crate::{Error, Result};

/// Term-by-document matrix with `ln(1 + tf)` weights. Terms below
/// `min_count` total occurrences are dropped; rows follow the returned
/// vocabulary (count descending, then token).
pub fn term_document_matrix(documents: &[Vec<String>], min_count: usize) -> (Vec<String>, CsrMatrix) {
    let mut totals: HashMap<&str, u64> = HashMap::new();
    for d in documents {
        for t in d {
            *totals.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = totals
        .into_iter()
        .filter(|&(_, c)| c >= min_count as u64)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let ids: HashMap<&str, usize> = kept.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();

    let mut triplets = Vec::new();
    for (col, d) in documents.iter().enumerate() {
        let mut tf: HashMap<usize, u32> = HashMap::new();
        for t in d {
            if let Some(&id) = ids.get(t.as_str()) {
                *tf.entry(id).or_default() += 1;
            }
        }
        triplets.extend(tf.into_iter().map(|(row, n)| (row, col, (n as f64).ln_1p())));
    }
    let words = kept.into_iter().map(|(w, _)| w.to_string()).collect();
    (words, CsrMatrix::from_triplets(ids.len(), documents.len(), triplets))
}

/// Term vectors are `U_k Σ_k` with `k = cfg.dim`.
pub fn train_lsa(documents: &[Vec<String>], cfg: &TrainConfig) -> Result<EmbeddingModel> {
    cfg.validate()?;
    let (words, matrix) = term_document_matrix(documents, cfg.min_count);
    if words.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let svd_cfg = SvdConfig {
        max_iters: 20,
        tol: 1e-9,
        seed: cfg.seed,
        ..SvdConfig::default()
    };
    let svd = randomized_svd(&matrix, cfg.dim, &svd_cfg)?;
    let k = cfg.dim;
    let mut vectors = Vec::with_capacity(words.len() * k);
    for r in 0..words.len() {
        for c in 0..k {
            vectors.push(svd.u[(r, c)] * svd.singular_values[c]);
        }
    }
    Ok(EmbeddingModel::new(EmbeddingKind::Lsa, k, words, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(spec: &[&str]) -> Vec<Vec<String>> {
        spec.iter()
            .map(|d| d.split_whitespace().map(String::from).collect())
            .collect()
    }

    #[test]
    fn log_weights() {
        let (words, m) = term_document_matrix(&docs(&["a a b", "b"]), 1);
        assert_eq!(words, ["a", "b"]);
        let d = m.to_dense();
        assert!((d[(0, 0)] - 3f64.ln()).abs() < 1e-15);
        assert!((d[(1, 0)] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(d[(0, 1)], 0.0);
    }

    #[test]
    fn rank_above_documents_is_rejected() {
        let cfg = TrainConfig {
            dim: 3,
            min_count: 1,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_lsa(&docs(&["a b c d", "a b"]), &cfg),
            Err(Error::RankTooLarge { requested: 3, max: 2 })
        ));
    }

    #[test]
    fn topical_neighbours() {
        // "x" and "y" never share a document but share their topic words.
        let corpus = docs(&[
            "x ship sea sail", "y ship sea port", "x sea sail port", "y sail ship port",
            "p bread oven cake", "q oven flour cake", "p flour bread cake", "q bread oven flour",
        ]);
        let cfg = TrainConfig {
            dim: 2,
            min_count: 1,
            ..TrainConfig::default()
        };
        let m = train_lsa(&corpus, &cfg).unwrap();
        assert!(m.cosine("x", "y").unwrap() > 0.9);
        assert!(m.cosine("x", "p").unwrap().abs() < 0.1);
    }
}
