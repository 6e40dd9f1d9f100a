//! Competitors for every experiment: pseudo-perplexity compression and
//! predicate scoring, embedding cosine similarity, and random deletion.

use serde::{Deserialize, Serialize};

use crate::backend::{cosine_similarity, pseudo_perplexity, sentence_embedding, MlmBackend};
use crate::compress::{
    compress_with, span_search_with, CompressionConfig, CompressionTrace, PreparedScorer,
    SpanCandidate, SpanScorer,
};
use crate::ndd::{DivergenceProfile, EditOperation, Sentence};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    PplCompress,
    PplPredicate,
    CosineScore,
    RandomCompress,
}

/// Perplexity ceiling for a candidate deletion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PplCeiling {
    /// A multiple of the unedited sentence's pseudo-perplexity.
    Relative(f64),
    Absolute(f64),
}

impl Default for PplCeiling {
    fn default() -> Self {
        PplCeiling::Relative(1.25)
    }
}

/// Scores a deletion by the pseudo-perplexity of the shortened sentence.
pub struct PplScorer<'b, B: MlmBackend + ?Sized> {
    pub backend: &'b B,
    pub ceiling: PplCeiling,
}

struct PreparedPpl<'a, B: MlmBackend + ?Sized> {
    backend: &'a B,
    sentence: Sentence,
    threshold: f64,
}

impl<B: MlmBackend + ?Sized> SpanScorer for PplScorer<'_, B> {
    fn prepare<'s>(&'s self, sentence: &Sentence) -> Result<Box<dyn PreparedScorer + 's>> {
        let threshold = match self.ceiling {
            PplCeiling::Relative(factor) => factor * pseudo_perplexity(self.backend, sentence)?,
            PplCeiling::Absolute(ceiling) => ceiling,
        };
        Ok(Box::new(PreparedPpl {
            backend: self.backend,
            sentence: sentence.clone(),
            threshold,
        }))
    }
}

impl<B: MlmBackend + ?Sized> PreparedScorer for PreparedPpl<'_, B> {
    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn score_deletion(&self, start: usize, end: usize) -> Result<(f64, Option<DivergenceProfile>)> {
        let edited = self.sentence.apply(&EditOperation::deletion(start, end))?;
        Ok((pseudo_perplexity(self.backend, &edited)?, None))
    }
}

/// The compression scaffold with pseudo-perplexity in place of NDD.
pub fn ppl_compress<B: MlmBackend + ?Sized>(
    sentence: &Sentence,
    backend: &B,
    config: &CompressionConfig,
    ceiling: PplCeiling,
) -> Result<CompressionTrace> {
    compress_with(sentence, &PplScorer { backend, ceiling }, config)
}

pub fn ppl_span_search<B: MlmBackend + ?Sized>(
    sentence: &Sentence,
    backend: &B,
    config: &CompressionConfig,
    ceiling: PplCeiling,
) -> Result<Vec<SpanCandidate>> {
    span_search_with(sentence, &PplScorer { backend, ceiling }, config)
}

/// Cosine similarity of the mean-pooled embeddings of two sentences.
pub fn cosine_score<B: MlmBackend + ?Sized>(
    before: &Sentence,
    after: &Sentence,
    backend: &B,
) -> Result<f64> {
    if !backend.supports_embeddings() {
        return Err(Error::Unsupported(
            "cosine scoring needs a backend with hidden states".into(),
        ));
    }
    let a = sentence_embedding(backend, before)?;
    let b = sentence_embedding(backend, after)?;
    cosine_similarity(&a, &b)
}
