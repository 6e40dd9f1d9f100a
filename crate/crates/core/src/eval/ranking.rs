//! Ranking metrics for predicate detection. Higher scores rank first.

use crate::predicate::WordRanking;
use crate::{Error, Result};

use super::SrlSentence;

/// Average precision of one ranked list; ties go to the earlier position.
/// `None` when there are no positives.
pub fn average_precision(labels: &[bool], scores: &[f64]) -> Option<f64> {
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Some(sum / positives as f64)
}

fn aligned<'a>(
    rankings: &'a [WordRanking],
    gold: &'a [SrlSentence],
) -> Result<impl Iterator<Item = (&'a [bool], &'a [f64])>> {
    if rankings.len() != gold.len() {
        return Err(Error::LengthMismatch(format!(
            "{} rankings for {} gold sentences",
            rankings.len(),
            gold.len()
        )));
    }
    for (k, (r, g)) in rankings.iter().zip(gold).enumerate() {
        if r.scores.len() != g.is_predicate.len() {
            return Err(Error::LengthMismatch(format!(
                "sentence {}: {} scores for {} words",
                k + 1,
                r.scores.len(),
                g.is_predicate.len()
            )));
        }
    }
    Ok(gold
        .iter()
        .zip(rankings)
        .map(|(g, r)| (g.is_predicate.as_slice(), r.scores.as_slice())))
}

/// Mean of per-sentence average precision over sentences with at least one
/// predicate.
pub fn mean_average_precision(rankings: &[WordRanking], gold: &[SrlSentence]) -> Result<f64> {
    let aps: Vec<f64> = aligned(rankings, gold)?
        .filter_map(|(labels, scores)| average_precision(labels, scores))
        .collect();
    if aps.is_empty() {
        return Err(Error::DegenerateCorpus(
            "no sentence contains a gold predicate".into(),
        ));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// ROC-AUC from the rank-sum statistic; tied scores count one half.
pub fn pairwise_auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateCorpus(format!(
            "AUC needs both classes ({positives} positives, {negatives} negatives)"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average 1-based ranks over runs of equal scores
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let average_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += average_rank * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let p = positives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

/// AUC over all words of the corpus pooled together.
pub fn auc(rankings: &[WordRanking], gold: &[SrlSentence]) -> Result<f64> {
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for (l, s) in aligned(rankings, gold)? {
        labels.extend_from_slice(l);
        scores.extend_from_slice(s);
    }
    pairwise_auc(&labels, &scores)
}

/// Mean per-sentence AUC over sentences containing both classes.
pub fn macro_auc(rankings: &[WordRanking], gold: &[SrlSentence]) -> Result<f64> {
    let per_sentence: Vec<f64> = aligned(rankings, gold)?
        .filter_map(|(l, s)| pairwise_auc(l, s).ok())
        .collect();
    if per_sentence.is_empty() {
        return Err(Error::DegenerateCorpus(
            "no sentence has both predicates and non-predicates".into(),
        ));
    }
    Ok(per_sentence.iter().sum::<f64>() / per_sentence.len() as f64)
}
