//! Deterministic stand-ins for a transformer, usable fully offline.
//!
//! [`NgramOracle`] is an order-2 interpolated n-gram model with add-one
//! smoothing, trained on a small corpus where every word is one token. The
//! masked prediction at a position multiplies a left-to-right trigram
//! estimate (two words of left context) by a right-to-left one (two words of
//! right context) and renormalizes. [`UniformOracle`] predicts the uniform
//! distribution everywhere.

use std::collections::{BTreeSet, HashMap};

use super::{tokenize_word, MaskedSequence, MlmBackend, SpecialTokens, Vocabulary};
use crate::{Error, Result};

/// The ~200-sentence corpus the default oracle is trained on.
pub const EMBEDDED_CORPUS: &str = include_str!("toy_corpus.txt");

/// Interpolation weights for the unigram, bigram and trigram terms.
pub const LAMBDAS: [f64; 3] = [0.1, 0.3, 0.6];

const MAX_LEN: usize = 512;
const EMBEDDING_DIM: usize = 32;

#[derive(Debug, Default, Clone)]
struct NgramCounts {
    trigram: HashMap<(u32, u32), HashMap<u32, u32>>,
    trigram_context: HashMap<(u32, u32), u32>,
    bigram: HashMap<u32, HashMap<u32, u32>>,
    bigram_context: HashMap<u32, u32>,
    unigram: Vec<u32>,
    total: u32,
}

impl NgramCounts {
    fn new(vocab_size: usize) -> Self {
        NgramCounts {
            unigram: vec![0; vocab_size],
            ..Default::default()
        }
    }

    /// `far` and `near` are the two context tokens, `near` adjacent to the
    /// target.
    fn observe(&mut self, far: u32, near: u32, target: u32) {
        *self
            .trigram
            .entry((far, near))
            .or_default()
            .entry(target)
            .or_default() += 1;
        *self.trigram_context.entry((far, near)).or_default() += 1;
        *self.bigram.entry(near).or_default().entry(target).or_default() += 1;
        *self.bigram_context.entry(near).or_default() += 1;
        self.unigram[target as usize] += 1;
        self.total += 1;
    }

    fn probabilities(&self, far: u32, near: u32) -> Vec<f64> {
        let v = self.unigram.len() as f64;
        let [l1, l2, l3] = LAMBDAS;
        let uni_denominator = f64::from(self.total) + v;
        let bi_denominator = f64::from(self.bigram_context.get(&near).copied().unwrap_or(0)) + v;
        let tri_denominator =
            f64::from(self.trigram_context.get(&(far, near)).copied().unwrap_or(0)) + v;
        let mut p: Vec<f64> = self
            .unigram
            .iter()
            .map(|&c| {
                l1 * (f64::from(c) + 1.0) / uni_denominator
                    + l2 / bi_denominator
                    + l3 / tri_denominator
            })
            .collect();
        if let Some(next) = self.bigram.get(&near) {
            for (&w, &c) in next {
                p[w as usize] += l2 * f64::from(c) / bi_denominator;
            }
        }
        if let Some(next) = self.trigram.get(&(far, near)) {
            for (&w, &c) in next {
                p[w as usize] += l3 * f64::from(c) / tri_denominator;
            }
        }
        p
    }
}

/// Bidirectional trigram oracle. See the module docs.
#[derive(Debug, Clone)]
pub struct NgramOracle {
    vocab: Vocabulary,
    forward: NgramCounts,
    backward: NgramCounts,
}

impl NgramOracle {
    /// Trained on [`EMBEDDED_CORPUS`].
    pub fn embedded() -> Self {
        Self::from_corpus(EMBEDDED_CORPUS.lines()).expect("embedded corpus is valid")
    }

    /// Builds a lowercased word-level vocabulary from `sentences` (one
    /// whitespace-tokenized sentence per item) and trains on them.
    pub fn from_corpus<'a, I>(sentences: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let sentences: Vec<Vec<String>> = sentences
            .into_iter()
            .map(|s| s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        if sentences.is_empty() {
            return Err(Error::Config("toy corpus is empty".into()));
        }
        let specials = SpecialTokens::default();
        let words: BTreeSet<&str> = sentences.iter().flatten().map(String::as_str).collect();
        let entries: Vec<String> = [
            &specials.pad,
            &specials.unk,
            &specials.cls,
            &specials.sep,
            &specials.mask,
        ]
        .into_iter()
        .cloned()
        .chain(words.into_iter().map(str::to_owned).filter(|w| {
            *w != specials.pad
                && *w != specials.unk
                && *w != specials.cls
                && *w != specials.sep
                && *w != specials.mask
        }))
        .collect();
        let vocab = Vocabulary::new(entries, &specials, false)?;

        let mut forward = NgramCounts::new(vocab.len());
        let mut backward = NgramCounts::new(vocab.len());
        for sentence in &sentences {
            let mut ids = Vec::with_capacity(sentence.len());
            for w in sentence {
                tokenize_word(w, &vocab, &mut ids);
            }
            let (cls, sep) = (vocab.cls_id, vocab.sep_id);
            for t in 0..ids.len() {
                let left1 = if t >= 1 { ids[t - 1] } else { cls };
                let left2 = if t >= 2 { ids[t - 2] } else { cls };
                let right1 = ids.get(t + 1).copied().unwrap_or(sep);
                let right2 = ids.get(t + 2).copied().unwrap_or(sep);
                forward.observe(left2, left1, ids[t]);
                backward.observe(right2, right1, ids[t]);
            }
        }
        Ok(NgramOracle {
            vocab,
            forward,
            backward,
        })
    }

    /// Normalized prediction at `position` of `ids`, context read from the
    /// sequence itself with `[CLS]`/`[SEP]` padding past either end.
    pub fn predict(&self, ids: &[u32], position: usize) -> Vec<f64> {
        let mut p = self.unnormalized(ids, position);
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        p
    }

    fn unnormalized(&self, ids: &[u32], position: usize) -> Vec<f64> {
        let (cls, sep) = (self.vocab.cls_id, self.vocab.sep_id);
        let left1 = position.checked_sub(1).map_or(cls, |i| ids[i]);
        let left2 = position.checked_sub(2).map_or(cls, |i| ids[i]);
        let right1 = ids.get(position + 1).copied().unwrap_or(sep);
        let right2 = ids.get(position + 2).copied().unwrap_or(sep);
        let f = self.forward.probabilities(left2, left1);
        let b = self.backward.probabilities(right2, right1);
        f.into_iter().zip(b).map(|(x, y)| x * y).collect()
    }
}

impl MlmBackend for NgramOracle {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn max_len(&self) -> usize {
        MAX_LEN
    }

    fn mask_logits(&self, batch: &[MaskedSequence]) -> Result<Vec<Vec<f64>>> {
        batch
            .iter()
            .map(|seq| {
                check_sequence(seq, &self.vocab, MAX_LEN)?;
                Ok(self
                    .unnormalized(&seq.token_ids, seq.mask_position)
                    .into_iter()
                    .map(f64::ln)
                    .collect())
            })
            .collect()
    }

    fn supports_embeddings(&self) -> bool {
        true
    }

    /// Hashed token embeddings, each position mixed with half of each
    /// adjacent token's embedding.
    fn hidden_states(&self, token_ids: &[u32]) -> Result<Vec<Vec<f64>>> {
        if token_ids.len() > MAX_LEN {
            return Err(Error::SequenceTooLong {
                len: token_ids.len(),
                limit: MAX_LEN,
            });
        }
        let embedded: Vec<Vec<f64>> = token_ids.iter().map(|&id| token_embedding(id)).collect();
        Ok((0..embedded.len())
            .map(|t| {
                let mut h = embedded[t].clone();
                for adjacent in [t.checked_sub(1), Some(t + 1)].into_iter().flatten() {
                    if let Some(e) = embedded.get(adjacent) {
                        h.iter_mut().zip(e).for_each(|(x, y)| *x += 0.5 * y);
                    }
                }
                h
            })
            .collect())
    }
}

fn check_sequence(seq: &MaskedSequence, vocab: &Vocabulary, max_len: usize) -> Result<()> {
    if seq.token_ids.len() > max_len {
        return Err(Error::SequenceTooLong {
            len: seq.token_ids.len(),
            limit: max_len,
        });
    }
    if seq.mask_position >= seq.token_ids.len() {
        return Err(Error::Backend(format!(
            "mask position {} outside a sequence of {} tokens",
            seq.mask_position,
            seq.token_ids.len()
        )));
    }
    if let Some(id) = seq.token_ids.iter().find(|&&id| id as usize >= vocab.len()) {
        return Err(Error::Backend(format!("token id {id} outside the vocabulary")));
    }
    Ok(())
}

// splitmix64-seeded components in [-1, 1)
fn token_embedding(id: u32) -> Vec<f64> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64 ^ (u64::from(id) << 17);
    (0..EMBEDDING_DIM)
        .map(|_| {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}

/// Predicts the uniform distribution at every position.
#[derive(Debug, Clone)]
pub struct UniformOracle {
    vocab: Vocabulary,
}

impl UniformOracle {
    pub fn new(vocab: Vocabulary) -> Self {
        UniformOracle { vocab }
    }
}

impl MlmBackend for UniformOracle {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn max_len(&self) -> usize {
        MAX_LEN
    }

    fn mask_logits(&self, batch: &[MaskedSequence]) -> Result<Vec<Vec<f64>>> {
        batch
            .iter()
            .map(|seq| {
                check_sequence(seq, &self.vocab, MAX_LEN)?;
                Ok(vec![0.0; self.vocab.len()])
            })
            .collect()
    }

    fn supports_embeddings(&self) -> bool {
        true
    }

    fn hidden_states(&self, token_ids: &[u32]) -> Result<Vec<Vec<f64>>> {
        Ok(token_ids.iter().map(|&id| token_embedding(id)).collect())
    }
}
