//! Abbreviation expansion mining.
//!
//! The crate turns a plain-text corpus into a scored dictionary of
//! short-form / long-form pairs and measures it against a benchmark built
//! from redirect and disambiguation pair records.
//!
//! Stages, in pipeline order:
//!
//! - [`corpus`]: tokenization, sentence splitting, occurrence index.
//! - [`ground_truth`]: pair filters and benchmark construction.
//! - [`candidates`]: parenthetical extraction and window-based candidates.
//! - [`embeddings`]: CBOW and LSA token vectors, semantic similarity features.
//! - [`alignment`]: max-over-alignments surface similarity.
//! - [`scorer`]: feature assembly and the logistic combiner.
//! - [`eval`]: folds, pseudo-precision curves, manual review sheets, fixtures.
//! - [`pipeline`]: configuration and the file-level stages driven by the CLI.

pub mod alignment;
pub mod candidates;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod ground_truth;
pub mod pipeline;
pub mod scorer;
mod util;

pub use error::{Error, Result};
