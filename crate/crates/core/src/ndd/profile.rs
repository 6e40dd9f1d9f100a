use serde::{Deserialize, Serialize};

use super::{kl_divergence, VocabDistribution};
use crate::{Error, Result};

/// Per-neighbor divergences and weights of one edit, plus their weighted sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceProfile {
    /// 1-based source positions of the neighbors.
    pub neighbor_positions: Vec<usize>,
    /// `KL(after || before)` per neighbor, in nats.
    pub divergences: Vec<f64>,
    pub weights: Vec<f64>,
    /// The NDD value in nats.
    pub score: f64,
}

impl DivergenceProfile {
    pub fn empty() -> Self {
        DivergenceProfile {
            neighbor_positions: Vec::new(),
            divergences: Vec::new(),
            weights: Vec::new(),
            score: 0.0,
        }
    }

    pub fn recompute_score(&self) -> f64 {
        dot(&self.divergences, &self.weights)
    }

    /// Same divergences under a different set of weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.divergences.len() {
            return Err(Error::LengthMismatch(format!(
                "{} weights for {} neighbors",
                weights.len(),
                self.divergences.len()
            )));
        }
        let score = dot(&self.divergences, &weights);
        Ok(DivergenceProfile {
            neighbor_positions: self.neighbor_positions.clone(),
            divergences: self.divergences.clone(),
            weights,
            score,
        })
    }
}

// folds from +0.0; an empty f64 sum is -0.0
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Weighted sum of `KL(after_k || before_k)` over aligned neighbor lists.
/// Neighbor positions in the result are numbered `1..=len`; use
/// [`ndd_at`] to record the real source positions.
pub fn ndd(
    before: &[VocabDistribution],
    after: &[VocabDistribution],
    weights: &[f64],
) -> Result<DivergenceProfile> {
    let positions: Vec<usize> = (1..=before.len()).collect();
    ndd_at(&positions, before, after, weights)
}

pub fn ndd_at(
    neighbor_positions: &[usize],
    before: &[VocabDistribution],
    after: &[VocabDistribution],
    weights: &[f64],
) -> Result<DivergenceProfile> {
    let n = before.len();
    if after.len() != n || weights.len() != n || neighbor_positions.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{n} before, {} after, {} weights, {} positions",
            after.len(),
            weights.len(),
            neighbor_positions.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::Config(format!("weight {w} is negative or not finite")));
    }
    let divergences = after
        .iter()
        .zip(before)
        .map(|(a, b)| kl_divergence(a, b))
        .collect::<Result<Vec<_>>>()?;
    let score = dot(&divergences, weights);
    Ok(DivergenceProfile {
        neighbor_positions: neighbor_positions.to_vec(),
        divergences,
        weights: weights.to_vec(),
        score,
    })
}
