use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest probability any entry may carry, so every KL term stays finite.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

const SUM_TOLERANCE: f64 = 1e-6;

/// Fingerprint of a vocabulary. Distributions may only be compared when they
/// were produced over the same vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VocabId(pub u64);

/// A probability vector over every entry of a vocabulary, as predicted at one
/// masked position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabDistribution {
    probabilities: Vec<f64>,
    vocab_id: VocabId,
}

impl VocabDistribution {
    /// Validates `probabilities` (non-negative, finite, summing to one) and
    /// applies the probability floor.
    pub fn new(probabilities: Vec<f64>, vocab_id: VocabId) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidDistribution("empty distribution".into()));
        }
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {p} is negative or not finite"
            )));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Self::floored(probabilities, vocab_id))
    }

    /// Softmax of `logits` followed by the probability floor.
    pub fn from_logits(logits: &[f64], vocab_id: VocabId) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::InvalidDistribution("empty logits".into()));
        }
        if logits.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(Error::InvalidDistribution("logits contain NaN or +inf".into()));
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::InvalidDistribution("all logits are -inf".into()));
        }
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        Ok(Self::floored(
            exps.into_iter().map(|e| e / total).collect(),
            vocab_id,
        ))
    }

    /// The uniform distribution over `size` entries.
    pub fn uniform(size: usize, vocab_id: VocabId) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidDistribution("empty distribution".into()));
        }
        Ok(VocabDistribution {
            probabilities: vec![1.0 / size as f64; size],
            vocab_id,
        })
    }

    // clamp, renormalize, clamp again: the second clamp only moves entries by
    // O(floor^2), well inside the sum tolerance.
    fn floored(mut probabilities: Vec<f64>, vocab_id: VocabId) -> Self {
        for p in probabilities.iter_mut() {
            *p = p.max(PROBABILITY_FLOOR);
        }
        let total: f64 = probabilities.iter().sum();
        for p in probabilities.iter_mut() {
            *p = (*p / total).max(PROBABILITY_FLOOR);
        }
        VocabDistribution {
            probabilities,
            vocab_id,
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn vocab_id(&self) -> VocabId {
        self.vocab_id
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probability(&self, id: usize) -> Option<f64> {
        self.probabilities.get(id).copied()
    }

    /// The `k` most probable entries, highest first; ties by lower id.
    pub fn top_k(&self, k: usize) -> Vec<(usize, f64)> {
        let mut idx: Vec<usize> = (0..self.probabilities.len()).collect();
        idx.sort_by(|&a, &b| {
            self.probabilities[b]
                .total_cmp(&self.probabilities[a])
                .then(a.cmp(&b))
        });
        idx.into_iter()
            .take(k)
            .map(|i| (i, self.probabilities[i]))
            .collect()
    }
}

/// `KL(after || before)` in nats: `sum_i after_i * ln(after_i / before_i)`.
///
/// `after` is predicted on the edited sentence, `before` on the original.
pub fn kl_divergence(after: &VocabDistribution, before: &VocabDistribution) -> Result<f64> {
    if after.vocab_id != before.vocab_id {
        return Err(Error::VocabMismatch(after.vocab_id.0, before.vocab_id.0));
    }
    if after.len() != before.len() {
        return Err(Error::DimensionMismatch {
            expected: before.len(),
            found: after.len(),
        });
    }
    let kl: f64 = after
        .probabilities
        .iter()
        .zip(&before.probabilities)
        .map(|(&p, &q)| if p == q { 0.0 } else { p * (p / q).ln() })
        .fold(0.0, |acc, x| acc + x);
    // rounding can leave a tiny negative residue for near-identical inputs
    Ok(kl.max(0.0))
}
