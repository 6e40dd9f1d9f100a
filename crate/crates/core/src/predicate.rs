//! Predicate detection: each word is edited on its own and ranked by the NDD
//! the edit causes. Predicates bind the most arguments, so editing them
//! disturbs the rest of the sentence the most.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{
    edited_neighbor_distributions, masked_distribution, pseudo_perplexity, tokenize_for,
    MlmBackend,
};
use crate::ndd::{ndd_at, EditOperation, Sentence, WeightConfig};
use crate::{Error, Result};

/// How each word is edited.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditionMode {
    Delete,
    ReplaceByMask,
    ReplaceByWord { word: String },
}

impl EditionMode {
    pub fn replace_by_word(word: impl Into<String>) -> Result<Self> {
        let word = word.into();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(Error::Config(format!(
                "replacement word {word:?} must be a single non-empty word"
            )));
        }
        Ok(EditionMode::ReplaceByWord { word })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EditionMode::Delete => "delete",
            EditionMode::ReplaceByMask => "mask",
            EditionMode::ReplaceByWord { .. } => "word",
        }
    }

    /// The single-word edit at 1-based `position`.
    pub fn edit_at(&self, position: usize, mask_token: &str) -> EditOperation {
        match self {
            EditionMode::Delete => EditOperation::deletion(position, position),
            EditionMode::ReplaceByMask => EditOperation::replacement(position, position, [mask_token]),
            EditionMode::ReplaceByWord { word } => {
                EditOperation::replacement(position, position, [word.as_str()])
            }
        }
    }
}

/// Default replacement word for a corpus: "a" for English in-domain,
/// "that" for English out-of-domain, "el" for Spanish.
pub fn default_replacement_word(corpus: &str) -> &'static str {
    match corpus {
        "eng-ood" | "en-ood" => "that",
        "spa" | "es" | "spanish" => "el",
        _ => "a",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingSource {
    Mode(EditionMode),
    Ensemble,
    Ppl(EditionMode),
}

/// One score per word; higher means more predicate-like.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRanking {
    pub sentence: Sentence,
    pub scores: Vec<f64>,
    pub source: RankingSource,
}

fn check_sentence(sentence: &Sentence) -> Result<()> {
    if sentence.len() < 2 {
        return Err(Error::InvalidSentence(
            "predicate ranking needs at least two words".into(),
        ));
    }
    Ok(())
}

/// NDD of editing each word with `mode`, plain distance weights.
pub fn word_edit_scores<B: MlmBackend + ?Sized>(
    sentence: &Sentence,
    backend: &B,
    mode: &EditionMode,
    mu: f64,
) -> Result<WordRanking> {
    check_sentence(sentence)?;
    let weights = WeightConfig::plain(mu);
    weights.validate()?;
    let ts = tokenize_for(backend, sentence)?;
    let n = sentence.len();
    let before = (1..=n)
        .into_par_iter()
        .map(|k| masked_distribution(backend, &ts, k))
        .collect::<Result<Vec<_>>>()?;
    let mask_token = backend.vocabulary().token(backend.vocabulary().mask_id).unwrap_or("[MASK]").to_owned();
    let scores = (1..=n)
        .into_par_iter()
        .map(|k| {
            let edit = mode.edit_at(k, &mask_token);
            let edited = sentence.apply(&edit)?;
            let positions = edit.neighbor_positions(n);
            let after = edited_neighbor_distributions(backend, &edited, &edit, &positions)?;
            let before_k: Vec<_> = positions.iter().map(|&p| before[p - 1].clone()).collect();
            let w = weights.weights(n, k, k)?;
            Ok(ndd_at(&positions, &before_k, &after, &w)?.score)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WordRanking {
        sentence: sentence.clone(),
        scores,
        source: RankingSource::Mode(mode.clone()),
    })
}

/// Within-sentence softmax of raw scores.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Product of the per-mode softmax probabilities of each word.
pub fn ensemble_scores(rankings: &[WordRanking]) -> Result<WordRanking> {
    let first = rankings
        .first()
        .ok_or_else(|| Error::Config("ensemble needs at least one ranking".into()))?;
    for r in rankings {
        if r.sentence != first.sentence || r.scores.len() != first.scores.len() {
            return Err(Error::LengthMismatch(
                "ensemble rankings must cover the same sentence".into(),
            ));
        }
    }
    let mut modes: Vec<&str> = rankings
        .iter()
        .map(|r| match &r.source {
            RankingSource::Mode(m) | RankingSource::Ppl(m) => m.name(),
            RankingSource::Ensemble => "ensemble",
        })
        .collect();
    modes.sort_unstable();
    if modes.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("ensemble rankings must use distinct modes".into()));
    }
    let mut product = vec![1.0; first.scores.len()];
    for r in rankings {
        for (p, s) in product.iter_mut().zip(softmax(&r.scores)) {
            *p *= s;
        }
    }
    Ok(WordRanking {
        sentence: first.sentence.clone(),
        scores: product,
        source: RankingSource::Ensemble,
    })
}

/// Scores word `k` by the pseudo-perplexity of the sentence after editing
/// it. With `delta`, the unedited sentence's pseudo-perplexity is
/// subtracted (same ranking within a sentence, comparable across them).
pub fn ppl_word_scores<B: MlmBackend + ?Sized>(
    sentence: &Sentence,
    backend: &B,
    mode: &EditionMode,
    delta: bool,
) -> Result<WordRanking> {
    check_sentence(sentence)?;
    if matches!(mode, EditionMode::ReplaceByWord { .. }) {
        return Err(Error::Unsupported(
            "perplexity scoring supports the delete and mask editions only".into(),
        ));
    }
    let mask_token = backend.vocabulary().token(backend.vocabulary().mask_id).unwrap_or("[MASK]").to_owned();
    let base = if delta {
        pseudo_perplexity(backend, sentence)?
    } else {
        0.0
    };
    let scores = (1..=sentence.len())
        .into_par_iter()
        .map(|k| {
            let edited = sentence.apply(&mode.edit_at(k, &mask_token))?;
            Ok(pseudo_perplexity(backend, &edited)? - base)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WordRanking {
        sentence: sentence.clone(),
        scores,
        source: RankingSource::Ppl(mode.clone()),
    })
}
