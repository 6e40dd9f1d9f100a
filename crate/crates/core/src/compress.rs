//! Deletion-only sentence compression.
//!
//! Each iteration scores the deletion of every span of up to `l_max` words,
//! keeps the spans scoring under the threshold, resolves overlaps, and deletes
//! the surviving spans at once. Iterations repeat until nothing more can be
//! deleted or `max_iterations` is reached.
//!
//! The search scaffold is shared with the perplexity baseline through
//! [`SpanScorer`].

use rand::seq::index::sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{
    edited_neighbor_distributions, masked_distribution, tokenize_for, MlmBackend,
};
use crate::ndd::{kl_divergence, DivergenceProfile, EditOperation, Sentence, VocabDistribution, WeightConfig};
use crate::{Error, Result};

/// Which span of an overlapping pair survives selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapKeep {
    /// The lower-scoring (less disruptive) span survives.
    #[default]
    Lower,
    Higher,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionConfig {
    pub l_max: usize,
    pub ndd_max: f64,
    pub weights: WeightConfig,
    pub max_iterations: usize,
    pub overlap_keep: OverlapKeep,
    /// Only used by the random baseline.
    pub seed: u64,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig {
            l_max: 9,
            ndd_max: 1.0,
            weights: WeightConfig::compression(0.9, 0.9),
            max_iterations: 10,
            overlap_keep: OverlapKeep::Lower,
            seed: 0,
        }
    }
}

impl CompressionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_max < 1 {
            return Err(Error::Config("l_max must be at least 1".into()));
        }
        if !(self.ndd_max >= 0.0) {
            return Err(Error::Config(format!("ndd_max must be non-negative, got {}", self.ndd_max)));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        self.weights.validate()
    }
}

/// A deletable span `start..=end` (1-based) and the score of deleting it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanCandidate {
    pub start: usize,
    pub end: usize,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<DivergenceProfile>,
}

impl SpanCandidate {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &SpanCandidate) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// Scores span deletions for one sentence.
pub trait SpanScorer: Sync {
    /// Per-sentence state, e.g. the unedited distributions.
    fn prepare<'s>(&'s self, sentence: &Sentence) -> Result<Box<dyn PreparedScorer + 's>>;
}

pub trait PreparedScorer: Sync {
    /// Deletions must score strictly below this to become candidates.
    fn threshold(&self) -> f64;

    fn score_deletion(&self, start: usize, end: usize) -> Result<(f64, Option<DivergenceProfile>)>;
}

/// NDD of a deletion under the given weights; the unedited sentence's
/// distributions are computed once per sentence.
pub struct NddScorer<'b, B: MlmBackend + ?Sized> {
    pub backend: &'b B,
    pub weights: WeightConfig,
    pub ndd_max: f64,
}

impl<'b, B: MlmBackend + ?Sized> NddScorer<'b, B> {
    pub fn new(backend: &'b B, config: &CompressionConfig) -> Self {
        NddScorer {
            backend,
            weights: config.weights,
            ndd_max: config.ndd_max,
        }
    }
}

struct PreparedNdd<'a, B: MlmBackend + ?Sized> {
    backend: &'a B,
    weights: WeightConfig,
    threshold: f64,
    sentence: Sentence,
    before: Vec<VocabDistribution>,
}

impl<B: MlmBackend + ?Sized> SpanScorer for NddScorer<'_, B> {
    fn prepare<'s>(&'s self, sentence: &Sentence) -> Result<Box<dyn PreparedScorer + 's>> {
        let ts = tokenize_for(self.backend, sentence)?;
        let before = (1..=sentence.len())
            .into_par_iter()
            .map(|k| masked_distribution(self.backend, &ts, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Box::new(PreparedNdd {
            backend: self.backend,
            weights: self.weights,
            threshold: self.ndd_max,
            sentence: sentence.clone(),
            before,
        }))
    }
}

impl<B: MlmBackend + ?Sized> PreparedScorer for PreparedNdd<'_, B> {
    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn score_deletion(&self, start: usize, end: usize) -> Result<(f64, Option<DivergenceProfile>)> {
        let n = self.sentence.len();
        let edit = EditOperation::deletion(start, end);
        let edited = self.sentence.apply(&edit)?;
        let positions = edit.neighbor_positions(n);
        let after = edited_neighbor_distributions(self.backend, &edited, &edit, &positions)?;
        let divergences = after
            .iter()
            .zip(&positions)
            .map(|(a, &k)| kl_divergence(a, &self.before[k - 1]))
            .collect::<Result<Vec<_>>>()?;
        let weights = self.weights.weights(n, start, end)?;
        let score = divergences.iter().zip(&weights).fold(0.0, |acc, (d, w)| acc + d * w);
        let profile = DivergenceProfile {
            neighbor_positions: positions,
            divergences,
            weights,
            score,
        };
        Ok((score, Some(profile)))
    }
}

/// All spans of at most `l_max` words, the whole sentence excluded, in
/// `(start, end)` order.
pub fn candidate_spans(n: usize, l_max: usize) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    for start in 1..=n {
        for end in start..=(start + l_max - 1).min(n) {
            if !(start == 1 && end == n) {
                spans.push((start, end));
            }
        }
    }
    spans
}

/// NDD span search with the configured weights.
pub fn span_search<B: MlmBackend + ?Sized>(
    sentence: &Sentence,
    backend: &B,
    config: &CompressionConfig,
) -> Result<Vec<SpanCandidate>> {
    span_search_with(sentence, &NddScorer::new(backend, config), config)
}

/// Every span of at most `l_max` words whose deletion scores below the
/// scorer's threshold.
pub fn span_search_with<S: SpanScorer + ?Sized>(
    sentence: &Sentence,
    scorer: &S,
    config: &CompressionConfig,
) -> Result<Vec<SpanCandidate>> {
    config.validate()?;
    if sentence.len() < 2 {
        return Err(Error::InvalidSentence(
            "span search needs at least two words".into(),
        ));
    }
    let prepared = scorer.prepare(sentence)?;
    let threshold = prepared.threshold();
    let scored = candidate_spans(sentence.len(), config.l_max)
        .into_par_iter()
        .map(|(start, end)| {
            prepared
                .score_deletion(start, end)
                .map(|(score, profile)| SpanCandidate {
                    start,
                    end,
                    score,
                    profile,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scored.into_iter().filter(|c| c.score < threshold).collect())
}

/// Greedy conflict resolution: candidates are visited best first (score in
/// the preferred direction, then longer span, then smaller start) and kept
/// unless they overlap one already kept. The result is sorted by start.
pub fn select_non_overlapping(candidates: &[SpanCandidate], keep: OverlapKeep) -> Vec<SpanCandidate> {
    let mut order: Vec<&SpanCandidate> = candidates.iter().collect();
    order.sort_by(|a, b| {
        let by_score = match keep {
            OverlapKeep::Lower => a.score.total_cmp(&b.score),
            OverlapKeep::Higher => b.score.total_cmp(&a.score),
        };
        by_score
            .then(b.len().cmp(&a.len()))
            .then(a.start.cmp(&b.start))
    });
    let mut kept: Vec<SpanCandidate> = Vec::new();
    for c in order {
        if !kept.iter().any(|k| k.overlaps(c)) {
            kept.push(c.clone());
        }
    }
    kept.sort_by_key(|c| c.start);
    kept
}

/// One pass of search, selection and deletion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub input: Sentence,
    /// Original-sentence positions of the input words.
    pub input_positions: Vec<usize>,
    pub found: Vec<SpanCandidate>,
    pub selected: Vec<SpanCandidate>,
    pub output: Sentence,
}

impl IterationRecord {
    /// Original-sentence positions of each deleted span.
    pub fn deleted_original_positions(&self) -> Vec<Vec<usize>> {
        self.selected
            .iter()
            .map(|c| self.input_positions[c.start - 1..c.end].to_vec())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionTrace {
    pub iterations: Vec<IterationRecord>,
    pub final_sentence: Sentence,
    /// Original positions of the words in `final_sentence`.
    pub kept_positions: Vec<usize>,
}

impl CompressionTrace {
    /// Every deleted span over all iterations, as original-sentence
    /// positions.
    pub fn pruned_spans(&self) -> Vec<Vec<usize>> {
        self.iterations
            .iter()
            .flat_map(IterationRecord::deleted_original_positions)
            .collect()
    }

    pub fn deleted_count(&self) -> usize {
        self.iterations
            .first()
            .map_or(0, |it| it.input.len() - self.final_sentence.len())
    }
}

/// Deletes the selected spans of one iteration. `input_positions` maps the
/// input words to original positions.
pub fn compress_once_with<S: SpanScorer + ?Sized>(
    sentence: &Sentence,
    input_positions: &[usize],
    scorer: &S,
    config: &CompressionConfig,
) -> Result<(Sentence, IterationRecord)> {
    let found = if sentence.len() < 2 {
        Vec::new()
    } else {
        span_search_with(sentence, scorer, config)?
    };
    let mut selected = select_non_overlapping(&found, config.overlap_keep);
    // Disjoint spans may still cover every word between them; drop the least
    // preferred span until at least one word survives.
    while selected.iter().map(SpanCandidate::len).sum::<usize>() >= sentence.len() {
        let worst = select_non_overlapping_rank(&selected, config.overlap_keep);
        selected.remove(worst);
    }
    let mut deleted = vec![false; sentence.len()];
    for c in &selected {
        deleted[c.start - 1..c.end].iter_mut().for_each(|d| *d = true);
    }
    let keep: Vec<usize> = (1..=sentence.len()).filter(|k| !deleted[k - 1]).collect();
    let output = sentence.retain_positions(&keep)?;
    let record = IterationRecord {
        input: sentence.clone(),
        input_positions: input_positions.to_vec(),
        found,
        selected,
        output: output.clone(),
    };
    Ok((output, record))
}

// Index of the least preferred candidate under the selection order.
fn select_non_overlapping_rank(selected: &[SpanCandidate], keep: OverlapKeep) -> usize {
    (0..selected.len())
        .max_by(|&a, &b| {
            let (x, y) = (&selected[a], &selected[b]);
            let by_score = match keep {
                OverlapKeep::Lower => x.score.total_cmp(&y.score),
                OverlapKeep::Higher => y.score.total_cmp(&x.score),
            };
            by_score
                .then(y.len().cmp(&x.len()))
                .then(x.start.cmp(&y.start))
        })
        .expect("non-empty selection")
}

pub fn compress_once<B: MlmBackend + ?Sized>(
    sentence: &Sentence,
    backend: &B,
    config: &CompressionConfig,
) -> Result<(Sentence, IterationRecord)> {
    let positions: Vec<usize> = (1..=sentence.len()).collect();
    compress_once_with(sentence, &positions, &NddScorer::new(backend, config), config)
}

/// Iterates [`compress_once_with`] until a fixed point or `max_iterations`.
pub fn compress_with<S: SpanScorer + ?Sized>(
    sentence: &Sentence,
    scorer: &S,
    config: &CompressionConfig,
) -> Result<CompressionTrace> {
    config.validate()?;
    let mut current = sentence.clone();
    let mut positions: Vec<usize> = (1..=sentence.len()).collect();
    let mut iterations = Vec::new();
    while iterations.len() < config.max_iterations {
        let (output, record) = compress_once_with(&current, &positions, scorer, config)?;
        let fixed_point = output.len() == current.len();
        let deleted: std::collections::HashSet<usize> =
            record.deleted_original_positions().into_iter().flatten().collect();
        positions.retain(|p| !deleted.contains(p));
        iterations.push(record);
        current = output;
        if fixed_point {
            break;
        }
    }
    Ok(CompressionTrace {
        iterations,
        final_sentence: current,
        kept_positions: positions,
    })
}

pub fn compress<B: MlmBackend + ?Sized>(
    sentence: &Sentence,
    backend: &B,
    config: &CompressionConfig,
) -> Result<CompressionTrace> {
    compress_with(sentence, &NddScorer::new(backend, config), config)
}

/// `k` distinct 1-based positions out of `n`, uniformly at random, sorted.
pub fn random_deletion_positions(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k >= n {
        return Err(Error::Config(format!(
            "cannot delete {k} of {n} words and keep a non-empty sentence"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, n, k).into_iter().map(|i| i + 1).collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Deletes `k` uniformly chosen words.
pub fn random_compress(sentence: &Sentence, k: usize, seed: u64) -> Result<Sentence> {
    let deleted = random_deletion_positions(sentence.len(), k, seed)?;
    let keep: Vec<usize> = (1..=sentence.len())
        .filter(|p| deleted.binary_search(p).is_err())
        .collect();
    sentence.retain_positions(&keep)
}
