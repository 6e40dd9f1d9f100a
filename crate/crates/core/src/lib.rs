//! Neighboring distribution divergence (NDD).
//!
//! An edit to a sentence is scored by how much it disturbs the masked-LM
//! predictions at the words it did not touch: every unedited word is masked
//! in turn, before and after the edit, and the two vocabulary distributions
//! are compared with a KL divergence. The per-word divergences are combined
//! with distance-decaying weights into a single score in nats.
//!
//! On top of the metric this crate provides:
//!
//! * [`compress`]: unsupervised, deletion-only sentence compression driven by NDD.
//! * [`predicate`]: ranking the words of a sentence by how predicate-like they are.
//! * [`baselines`]: pseudo-perplexity, embedding cosine and random competitors.
//! * [`eval`]: corpus loaders (JSON-lines, CoNLL-U, CoNLL-2009) and every metric
//!   used to evaluate the above.
//!
//! Models are accessed through the [`backend::MlmBackend`] trait. Two
//! implementations ship: a deterministic n-gram oracle trained on an embedded
//! corpus ([`backend::toy`]), and an ONNX transformer bundle loader
//! (`backend::onnx`, behind the default `onnx` feature).

pub mod backend;
pub mod baselines;
pub mod compress;
mod error;
pub mod eval;
pub mod ndd;
pub mod predicate;

pub use backend::score_edit;
pub use error::{Error, Result};
pub use ndd::{
    kl_divergence, ndd, DivergenceProfile, EditKind, EditOperation, Sentence, VocabDistribution,
    VocabId, WeightConfig,
};
