use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Stand-in for a zero n-gram precision in the smoothed composite.
pub const BLEU_EPSILON: f64 = 1e-9;

const MAX_ORDER: usize = 4;

/// Clipped n-gram matches and totals for orders `1..=max_n`, plus lengths.
/// Counts add up across sentences for corpus-level BLEU.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BleuCounts {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    /// Reference n-gram counts per order, to tell vacuous orders apart.
    pub reference_totals: Vec<u64>,
    pub candidate_len: u64,
    pub reference_len: u64,
}

impl BleuCounts {
    pub fn new(candidate: &[String], reference: &[String], max_n: usize) -> Self {
        let mut counts = BleuCounts {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            reference_totals: vec![0; max_n],
            candidate_len: candidate.len() as u64,
            reference_len: reference.len() as u64,
        };
        for n in 1..=max_n {
            let cand = ngrams(candidate, n);
            let refs = ngrams(reference, n);
            counts.matches[n - 1] = cand
                .iter()
                .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
                .sum();
            counts.totals[n - 1] = candidate.len().saturating_sub(n - 1) as u64;
            counts.reference_totals[n - 1] = reference.len().saturating_sub(n - 1) as u64;
        }
        counts
    }

    pub fn add(&mut self, other: &BleuCounts) {
        if self.matches.is_empty() {
            *self = other.clone();
            return;
        }
        for n in 0..self.matches.len() {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
            self.reference_totals[n] += other.reference_totals[n];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    /// Per-order precisions. An order with no candidate n-grams is 1 when
    /// the reference has none either, 0 otherwise.
    pub fn score(&self) -> BleuScore {
        let precisions: Vec<f64> = (0..self.matches.len())
            .map(|n| match (self.totals[n], self.reference_totals[n]) {
                (0, 0) => 1.0,
                (0, _) => 0.0,
                (t, _) => self.matches[n] as f64 / t as f64,
            })
            .collect();
        let brevity_penalty = if self.candidate_len == 0 {
            0.0
        } else if self.candidate_len >= self.reference_len {
            1.0
        } else {
            (1.0 - self.reference_len as f64 / self.candidate_len as f64).exp()
        };
        let geometric = |floor: f64| {
            let mean_ln = precisions.iter().map(|&p| p.max(floor).ln()).sum::<f64>()
                / precisions.len() as f64;
            mean_ln.exp()
        };
        let composite_unsmoothed = if precisions.contains(&0.0) {
            0.0
        } else {
            brevity_penalty * geometric(0.0)
        };
        let composite = brevity_penalty * geometric(BLEU_EPSILON);
        BleuScore {
            precisions,
            brevity_penalty,
            composite,
            composite_unsmoothed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// Clipped n-gram precision for n = 1..=max_n (unsmoothed).
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    /// `BP * exp(mean ln p_n)` with zero precisions replaced by
    /// [`BLEU_EPSILON`].
    pub composite: f64,
    pub composite_unsmoothed: f64,
}

fn ngrams(words: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut out = HashMap::new();
    if words.len() >= n {
        for g in words.windows(n) {
            *out.entry(g).or_default() += 1;
        }
    }
    out
}

/// Sentence-level BLEU with orders `1..=max_n` (4 when `max_n` is 0).
pub fn bleu(candidate: &[String], reference: &[String], max_n: usize) -> BleuScore {
    let max_n = if max_n == 0 { MAX_ORDER } else { max_n };
    BleuCounts::new(candidate, reference, max_n).score()
}

/// Corpus-level BLEU: n-gram counts and lengths are summed before scoring.
pub fn corpus_bleu<'a, I>(pairs: I, max_n: usize) -> BleuScore
where
    I: IntoIterator<Item = (&'a [String], &'a [String])>,
{
    let max_n = if max_n == 0 { MAX_ORDER } else { max_n };
    let mut total = BleuCounts {
        matches: vec![0; max_n],
        totals: vec![0; max_n],
        reference_totals: vec![0; max_n],
        ..Default::default()
    };
    for (c, r) in pairs {
        total.add(&BleuCounts::new(c, r, max_n));
    }
    total.score()
}
