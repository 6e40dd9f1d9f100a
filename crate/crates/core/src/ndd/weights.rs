use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How neighbor divergences are weighted before summation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    /// Distance decay: a neighbor `d` words from the edited span gets `mu^d`.
    pub mu: f64,
    /// Position decay: the word at source position `k` gets `nu^k`.
    pub nu: f64,
    /// Add the mirrored boundary term to the distance weights.
    pub balanced: bool,
    /// Multiply in the position weights.
    pub positional: bool,
}

impl WeightConfig {
    /// Plain distance weights with decay `mu`.
    pub fn plain(mu: f64) -> Self {
        WeightConfig {
            mu,
            nu: 1.0,
            balanced: false,
            positional: false,
        }
    }

    /// Balanced distance weights times position weights, as used for
    /// compression candidates.
    pub fn compression(mu: f64, nu: f64) -> Self {
        WeightConfig {
            mu,
            nu,
            balanced: true,
            positional: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::Config(format!("mu must be in (0, 1], got {}", self.mu)));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::Config(format!("nu must be in (0, 1], got {}", self.nu)));
        }
        Ok(())
    }

    /// Final per-neighbor weights for an edit of the span `i..=j` in a
    /// sentence of `n` words, one per entry of [`neighbor_positions`].
    pub fn weights(&self, n: usize, i: usize, j: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let distance = if self.balanced {
            balanced_distance_weights(n, i, j, self.mu)?
        } else {
            distance_weights(n, i, j, self.mu)?
        };
        if !self.positional {
            return Ok(distance);
        }
        let position = position_weights(&neighbor_positions(n, i, j), self.nu);
        Ok(distance
            .into_iter()
            .zip(position)
            .map(|(a, b)| a * b)
            .collect())
    }
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig::plain(1.0)
    }
}

fn check_span(n: usize, i: usize, j: usize) -> Result<()> {
    if i < 1 || i > j || j > n {
        return Err(Error::InvalidEdit(format!(
            "span {i}..={j} is not within 1..={n}"
        )));
    }
    Ok(())
}

/// Source positions `1..i` followed by `j+1..=n`.
pub fn neighbor_positions(n: usize, i: usize, j: usize) -> Vec<usize> {
    (1..i).chain(j + 1..=n).collect()
}

/// `mu^min(|k-i|, |k-j|)` for each neighbor position `k`.
pub fn distance_weights(n: usize, i: usize, j: usize, mu: f64) -> Result<Vec<f64>> {
    check_span(n, i, j)?;
    Ok(neighbor_positions(n, i, j)
        .into_iter()
        .map(|k| mu.powi(span_distance(k, i, j) as i32))
        .collect())
}

fn span_distance(k: usize, i: usize, j: usize) -> usize {
    k.abs_diff(i).min(k.abs_diff(j))
}

/// Distance weights with a mirrored term that lifts words near the sentence
/// boundaries.
///
/// The `n' = n - (j - i + 1)` neighbors are re-indexed `1..=n'` in surface
/// order. Neighbor `m` gets `a_m + a_{n'+1-m} * mu^n'`, where `a_m` is the
/// plain distance weight of the neighbor at re-indexed slot `m`.
pub fn balanced_distance_weights(n: usize, i: usize, j: usize, mu: f64) -> Result<Vec<f64>> {
    let plain = distance_weights(n, i, j, mu)?;
    let remaining = plain.len();
    let mirror_scale = mu.powi(remaining as i32);
    Ok((0..remaining)
        .map(|m| plain[m] + plain[remaining - 1 - m] * mirror_scale)
        .collect())
}

/// `nu^k` for each 1-based source position `k`.
pub fn position_weights(positions: &[usize], nu: f64) -> Vec<f64> {
    positions.iter().map(|&k| nu.powi(k as i32)).collect()
}
