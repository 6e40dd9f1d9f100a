//! Direct, slow reimplementations used as references.

use std::collections::BTreeSet;

pub const FLOOR: f64 = 1e-12;

pub fn floor(p: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = p.iter().map(|&x| x.max(FLOOR)).collect();
    let total: f64 = clamped.iter().sum();
    clamped.iter().map(|&x| (x / total).max(FLOOR)).collect()
}

pub fn kl(after: &[f64], before: &[f64]) -> f64 {
    let mut sum = 0.0;
    for k in 0..after.len() {
        sum += after[k] * (after[k] / before[k]).ln();
    }
    sum
}

fn power(base: f64, exp: usize) -> f64 {
    let mut out = 1.0;
    for _ in 0..exp {
        out *= base;
    }
    out
}

pub fn neighbors(n: usize, i: usize, j: usize) -> Vec<usize> {
    (1..=n).filter(|&k| k < i || k > j).collect()
}

pub fn distance(n: usize, i: usize, j: usize, mu: f64) -> Vec<f64> {
    neighbors(n, i, j)
        .into_iter()
        .map(|k| {
            let to_i = k.abs_diff(i);
            let to_j = k.abs_diff(j);
            power(mu, to_i.min(to_j))
        })
        .collect()
}

pub fn balanced(n: usize, i: usize, j: usize, mu: f64) -> Vec<f64> {
    let a = distance(n, i, j, mu);
    let np = a.len();
    (1..=np)
        .map(|m| a[m - 1] + a[np + 1 - m - 1] * power(mu, np))
        .collect()
}

pub fn position(n: usize, i: usize, j: usize, nu: f64) -> Vec<f64> {
    neighbors(n, i, j).into_iter().map(|k| power(nu, k)).collect()
}

pub fn f1(system: &BTreeSet<usize>, gold: &BTreeSet<usize>) -> (f64, f64, f64) {
    if system.is_empty() && gold.is_empty() {
        return (1.0, 1.0, 1.0);
    }
    if system.is_empty() || gold.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mut common = 0;
    for s in system {
        for g in gold {
            if s == g {
                common += 1;
            }
        }
    }
    let p = common as f64 / system.len() as f64;
    let r = common as f64 / gold.len() as f64;
    let f = if common == 0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

fn count(words: &[String], gram: &[String]) -> usize {
    if words.len() < gram.len() {
        return 0;
    }
    (0..=words.len() - gram.len())
        .filter(|&s| &words[s..s + gram.len()] == gram)
        .count()
}

/// Per-order (clipped matches, candidate total, reference total).
pub fn bleu_counts(cand: &[String], reference: &[String], max_n: usize) -> Vec<(usize, usize, usize)> {
    (1..=max_n)
        .map(|n| {
            let total = cand.len().saturating_sub(n - 1);
            let ref_total = reference.len().saturating_sub(n - 1);
            let mut seen: Vec<&[String]> = Vec::new();
            let mut matches = 0;
            if cand.len() >= n {
                for s in 0..=cand.len() - n {
                    let g = &cand[s..s + n];
                    if seen.contains(&g) {
                        continue;
                    }
                    seen.push(g);
                    matches += count(cand, g).min(count(reference, g));
                }
            }
            (matches, total, ref_total)
        })
        .collect()
}

/// (precisions, smoothed composite, unsmoothed composite).
pub fn bleu_from_counts(
    counts: &[(usize, usize, usize)],
    cand_len: usize,
    ref_len: usize,
) -> (Vec<f64>, f64, f64) {
    let precisions: Vec<f64> = counts
        .iter()
        .map(|&(m, t, rt)| {
            if t == 0 {
                if rt == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                m as f64 / t as f64
            }
        })
        .collect();
    let bp = if cand_len == 0 {
        0.0
    } else if cand_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    };
    let n = precisions.len() as f64;
    let smoothed = bp * (precisions.iter().map(|p| p.max(1e-9).ln()).sum::<f64>() / n).exp();
    let unsmoothed = if precisions.contains(&0.0) {
        0.0
    } else {
        bp * (precisions.iter().map(|p| p.ln()).sum::<f64>() / n).exp()
    };
    (precisions, smoothed, unsmoothed)
}

pub fn depth(heads: &[usize], k: usize) -> usize {
    if heads[k - 1] == 0 {
        1
    } else {
        1 + depth(heads, heads[k - 1])
    }
}

fn is_ancestor_or_self(heads: &[usize], a: usize, mut k: usize) -> bool {
    loop {
        if k == a {
            return true;
        }
        if k == 0 {
            return false;
        }
        k = heads[k - 1];
    }
}

pub fn is_subtree(heads: &[usize], set: &BTreeSet<usize>) -> bool {
    let n = heads.len();
    (1..=n).any(|v| {
        let desc: BTreeSet<usize> = (1..=n).filter(|&u| is_ancestor_or_self(heads, v, u)).collect();
        desc == *set
    })
}

/// 1-based rank of every item: higher scores first, ties by position.
fn ranks(scores: &[f64]) -> Vec<usize> {
    (0..scores.len())
        .map(|i| {
            1 + (0..scores.len())
                .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
                .count()
        })
        .collect()
}

pub fn average_precision(labels: &[bool], scores: &[f64]) -> Option<f64> {
    let r = ranks(scores);
    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    if positives.is_empty() {
        return None;
    }
    let sum: f64 = positives
        .iter()
        .map(|&i| {
            let above = positives.iter().filter(|&&j| r[j] <= r[i]).count();
            above as f64 / r[i] as f64
        })
        .sum();
    Some(sum / positives.len() as f64)
}

pub fn auc(labels: &[bool], scores: &[f64]) -> Option<f64> {
    let mut pairs = 0.0;
    let mut good = 0.0;
    for p in 0..labels.len() {
        for q in 0..labels.len() {
            if labels[p] && !labels[q] {
                pairs += 1.0;
                if scores[p] > scores[q] {
                    good += 1.0;
                } else if scores[p] == scores[q] {
                    good += 0.5;
                }
            }
        }
    }
    (pairs > 0.0).then(|| good / pairs)
}
