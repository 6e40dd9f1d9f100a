//! Masked-LM backends and everything that turns sentences into vocabulary
//! distributions.
//!
//! A word is masked by replacing its whole subword span with a single mask
//! token; its distribution is read at that one position. Neighbor profiles
//! are therefore aligned by word index whatever the subword split.

mod tokenizer;
pub mod toy;
mod vocab;

#[cfg(feature = "onnx")]
pub mod onnx;

pub use tokenizer::{tokenize, tokenize_word, TokenizedSentence};
pub use vocab::{SpecialTokens, Vocabulary};

use crate::ndd::{ndd_at, DivergenceProfile, EditOperation, Sentence, VocabDistribution, WeightConfig};
use crate::{Error, Result};

/// One input sequence with a single position whose logits are wanted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSequence {
    pub token_ids: Vec<u32>,
    pub mask_position: usize,
}

/// A masked language model.
///
/// Implementations must be deterministic: identical inputs give bit-identical
/// outputs, regardless of what else is in the same call.
pub trait MlmBackend: Send + Sync {
    fn vocabulary(&self) -> &Vocabulary;

    /// Longest accepted sequence, boundary tokens included.
    fn max_len(&self) -> usize;

    /// Logits over the vocabulary at each sequence's `mask_position`.
    fn mask_logits(&self, batch: &[MaskedSequence]) -> Result<Vec<Vec<f64>>>;

    fn supports_embeddings(&self) -> bool {
        false
    }

    /// Final-layer hidden state of every position of `token_ids`.
    fn hidden_states(&self, _token_ids: &[u32]) -> Result<Vec<Vec<f64>>> {
        Err(Error::Unsupported(
            "this backend does not expose hidden states".into(),
        ))
    }
}

impl<B: MlmBackend + ?Sized> MlmBackend for std::sync::Arc<B> {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }
    fn max_len(&self) -> usize {
        (**self).max_len()
    }
    fn mask_logits(&self, batch: &[MaskedSequence]) -> Result<Vec<Vec<f64>>> {
        (**self).mask_logits(batch)
    }
    fn supports_embeddings(&self) -> bool {
        (**self).supports_embeddings()
    }
    fn hidden_states(&self, token_ids: &[u32]) -> Result<Vec<Vec<f64>>> {
        (**self).hidden_states(token_ids)
    }
}

pub fn tokenize_for<B: MlmBackend + ?Sized>(
    backend: &B,
    sentence: &Sentence,
) -> Result<TokenizedSentence> {
    tokenize(sentence, backend.vocabulary(), backend.max_len())
}

/// Distribution predicted for the 1-based `word_index` when that word is
/// masked.
pub fn masked_distribution<B: MlmBackend + ?Sized>(
    backend: &B,
    ts: &TokenizedSentence,
    word_index: usize,
) -> Result<VocabDistribution> {
    let mut out = batch_masked_distributions(backend, ts, &[word_index])?;
    Ok(out.pop().expect("one distribution per index"))
}

/// [`masked_distribution`] for several words in one backend call.
pub fn batch_masked_distributions<B: MlmBackend + ?Sized>(
    backend: &B,
    ts: &TokenizedSentence,
    word_indices: &[usize],
) -> Result<Vec<VocabDistribution>> {
    let vocab = backend.vocabulary();
    let batch = word_indices
        .iter()
        .map(|&w| {
            ts.masked_word(w, vocab.mask_id)
                .map(|(token_ids, mask_position)| MaskedSequence {
                    token_ids,
                    mask_position,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    distributions(backend, &batch)
}

fn distributions<B: MlmBackend + ?Sized>(
    backend: &B,
    batch: &[MaskedSequence],
) -> Result<Vec<VocabDistribution>> {
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let vocab = backend.vocabulary();
    let logits = backend.mask_logits(batch)?;
    if logits.len() != batch.len() {
        return Err(Error::Backend(format!(
            "backend returned {} rows for {} sequences",
            logits.len(),
            batch.len()
        )));
    }
    logits
        .iter()
        .map(|row| {
            if row.len() != vocab.len() {
                return Err(Error::Backend(format!(
                    "logits have {} entries, vocabulary has {}",
                    row.len(),
                    vocab.len()
                )));
            }
            VocabDistribution::from_logits(row, vocab.id())
        })
        .collect()
}

/// Distributions at the unedited words of `edit`, before and after it.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborProfiles {
    /// 1-based source positions of the neighbors.
    pub positions: Vec<usize>,
    pub before: Vec<VocabDistribution>,
    pub after: Vec<VocabDistribution>,
}

pub fn neighbor_profiles<B: MlmBackend + ?Sized>(
    backend: &B,
    source: &Sentence,
    edit: &EditOperation,
) -> Result<NeighborProfiles> {
    let edited = source.apply(edit)?;
    let positions = edit.neighbor_positions(source.len());
    let before = batch_masked_distributions(backend, &tokenize_for(backend, source)?, &positions)?;
    let after = edited_neighbor_distributions(backend, &edited, edit, &positions)?;
    Ok(NeighborProfiles {
        positions,
        before,
        after,
    })
}

/// NDD of applying `edit` to `source`.
pub fn score_edit<B: MlmBackend + ?Sized>(
    backend: &B,
    source: &Sentence,
    edit: &EditOperation,
    weights: &WeightConfig,
) -> Result<DivergenceProfile> {
    let w = weights.weights(source.len(), edit.start, edit.end)?;
    let profiles = neighbor_profiles(backend, source, edit)?;
    ndd_at(&profiles.positions, &profiles.before, &profiles.after, &w)
}

/// Distributions in the edited sentence at the given source neighbor
/// positions.
pub(crate) fn edited_neighbor_distributions<B: MlmBackend + ?Sized>(
    backend: &B,
    edited: &Sentence,
    edit: &EditOperation,
    source_positions: &[usize],
) -> Result<Vec<VocabDistribution>> {
    let shifted = source_positions
        .iter()
        .map(|&k| {
            edit.edited_position(k)
                .ok_or_else(|| Error::InvalidEdit(format!("position {k} is inside the edit")))
        })
        .collect::<Result<Vec<_>>>()?;
    batch_masked_distributions(backend, &tokenize_for(backend, edited)?, &shifted)
}

/// Leave-one-out pseudo-perplexity over every subword of the sentence:
/// `exp(-(1/m) * sum ln p(token | token masked))`.
pub fn pseudo_perplexity<B: MlmBackend + ?Sized>(backend: &B, sentence: &Sentence) -> Result<f64> {
    let ts = tokenize_for(backend, sentence)?;
    let mask_id = backend.vocabulary().mask_id;
    let positions: Vec<usize> = ts.word_spans.iter().flat_map(|r| r.clone()).collect();
    let batch: Vec<MaskedSequence> = positions
        .iter()
        .map(|&p| {
            let mut token_ids = ts.token_ids.clone();
            token_ids[p] = mask_id;
            MaskedSequence {
                token_ids,
                mask_position: p,
            }
        })
        .collect();
    let dists = distributions(backend, &batch)?;
    let total_ln: f64 = positions
        .iter()
        .zip(&dists)
        .map(|(&p, d)| d.probabilities()[ts.token_ids[p] as usize].ln())
        .sum();
    Ok((-total_ln / positions.len() as f64).exp())
}

/// Mean of the final hidden states over the sentence's subword positions.
pub fn sentence_embedding<B: MlmBackend + ?Sized>(
    backend: &B,
    sentence: &Sentence,
) -> Result<Vec<f64>> {
    if !backend.supports_embeddings() {
        return Err(Error::Unsupported(
            "sentence embeddings need a backend with hidden states".into(),
        ));
    }
    let ts = tokenize_for(backend, sentence)?;
    let states = backend.hidden_states(&ts.token_ids)?;
    if states.len() != ts.token_ids.len() {
        return Err(Error::Backend(format!(
            "{} hidden states for {} tokens",
            states.len(),
            ts.token_ids.len()
        )));
    }
    let positions: Vec<usize> = ts.word_spans.iter().flat_map(|r| r.clone()).collect();
    let dim = states[positions[0]].len();
    let mut mean = vec![0.0; dim];
    for &p in &positions {
        if states[p].len() != dim {
            return Err(Error::Backend("ragged hidden states".into()));
        }
        for (m, h) in mean.iter_mut().zip(&states[p]) {
            *m += h;
        }
    }
    let count = positions.len() as f64;
    mean.iter_mut().for_each(|m| *m /= count);
    Ok(mean)
}

/// Cosine of the angle between `a` and `b`; zero when either has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}
