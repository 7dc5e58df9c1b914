//! Token embeddings and semantic similarity features.
//!
//! Two models feed the scorer: CBOW vectors for near-synonymy and LSA term
//! vectors for topical relatedness. Both are trained on lowercased word
//! tokens; parentheses and sentence terminators are left out.

mod cbow;
mod lsa;
mod model;
pub mod svd;

pub use cbow::{
    example_gradient, example_loss, train_cbow, CbowParams, ExampleGradient, TrainConfig,
};
pub use lsa::{term_document_matrix, train_lsa};
pub use model::{semantic_features, EmbeddingKind, EmbeddingModel, SemanticFeatures, SIM_CLAMP};

use crate::corpus::{is_structural, Corpus};

/// Lowercased word tokens of every sentence, for window-based training.
pub fn sentence_sequences(corpus: &Corpus) -> Vec<Vec<String>> {
    corpus
        .documents
        .iter()
        .flat_map(|doc| {
            doc.sentences.iter().map(move |&span| {
                doc.sentence_tokens(span)
                    .iter()
                    .filter(|t| !is_structural(&t.surface))
                    .map(|t| t.surface.to_lowercase())
                    .collect::<Vec<_>>()
            })
        })
        .filter(|s| !s.is_empty())
        .collect()
}

/// Lowercased word tokens of every document, for term-document statistics.
pub fn document_sequences(corpus: &Corpus) -> Vec<Vec<String>> {
    corpus
        .documents
        .iter()
        .map(|doc| {
            doc.tokens
                .iter()
                .filter(|t| !is_structural(&t.surface))
                .map(|t| t.surface.to_lowercase())
                .collect()
        })
        .collect()
}
