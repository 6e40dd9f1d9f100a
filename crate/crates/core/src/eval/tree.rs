use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A dependency tree over 1-based word positions; head 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyTree {
    pub words: Vec<String>,
    pub heads: Vec<usize>,
    pub labels: Vec<String>,
}

impl DependencyTree {
    pub fn new(words: Vec<String>, heads: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        let tree = DependencyTree {
            words,
            heads,
            labels,
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.words.len();
        if n == 0 {
            return Err(Error::InvalidSentence("tree has no words".into()));
        }
        if self.heads.len() != n || self.labels.len() != n {
            return Err(Error::LengthMismatch(format!(
                "{n} words, {} heads, {} labels",
                self.heads.len(),
                self.labels.len()
            )));
        }
        if let Some((k, h)) = self.heads.iter().enumerate().find(|(_, &h)| h > n) {
            return Err(Error::InvalidSentence(format!(
                "word {} has head {h} outside 0..={n}",
                k + 1
            )));
        }
        let roots = self.heads.iter().filter(|&&h| h == 0).count();
        if roots != 1 {
            return Err(Error::InvalidSentence(format!(
                "tree has {roots} roots, expected exactly one"
            )));
        }
        for k in 1..=n {
            let mut node = k;
            for _ in 0..=n {
                node = self.heads[node - 1];
                if node == 0 {
                    break;
                }
            }
            if node != 0 {
                return Err(Error::InvalidSentence(format!(
                    "word {k} is on a head cycle"
                )));
            }
        }
        Ok(())
    }

    /// Depth of the 1-based word `k`; the root has depth 1.
    pub fn depth(&self, k: usize) -> usize {
        let mut depth = 1;
        let mut node = self.heads[k - 1];
        while node != 0 {
            depth += 1;
            node = self.heads[node - 1];
        }
        depth
    }

    /// `k` and everything below it.
    pub fn descendants(&self, k: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::from([k]);
        let mut stack = vec![k];
        while let Some(node) = stack.pop() {
            for (child, &h) in (1..).zip(&self.heads) {
                if h == node && out.insert(child) {
                    stack.push(child);
                }
            }
        }
        out
    }

    /// Whether `words` is exactly the descendant set of one of its members.
    pub fn is_subtree(&self, words: &BTreeSet<usize>) -> bool {
        if words.is_empty() || words.iter().any(|&k| k < 1 || k > self.len()) {
            return false;
        }
        let mut tops = words
            .iter()
            .filter(|&&k| !words.contains(&self.heads[k - 1]));
        match (tops.next(), tops.next()) {
            (Some(&top), None) => self.descendants(top) == *words,
            _ => false,
        }
    }
}

/// Share of pruned words at depth 1, 2, 3 and 4 or more, corpus-wide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthProfile {
    pub counts: [usize; 4],
    pub proportions: [f64; 4],
    pub total: usize,
    /// Set when nothing was pruned (all proportions are then zero).
    pub empty: bool,
}

pub fn depth_distribution(
    trees: &[DependencyTree],
    pruned: &[BTreeSet<usize>],
) -> Result<DepthProfile> {
    if trees.len() != pruned.len() {
        return Err(Error::LengthMismatch(format!(
            "{} trees, {} pruned sets",
            trees.len(),
            pruned.len()
        )));
    }
    let mut counts = [0usize; 4];
    for (t, (tree, words)) in trees.iter().zip(pruned).enumerate() {
        for &k in words {
            if k < 1 || k > tree.len() {
                return Err(Error::InvalidEdit(format!(
                    "tree {}: pruned word {k} outside 1..={}",
                    t + 1,
                    tree.len()
                )));
            }
            counts[tree.depth(k).min(4) - 1] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let proportions = if total == 0 {
        [0.0; 4]
    } else {
        counts.map(|c| c as f64 / total as f64)
    };
    Ok(DepthProfile {
        counts,
        proportions,
        total,
        empty: total == 0,
    })
}

/// Share of pruned spans that are subtrees, by span length 1, 2 and 3 or
/// more.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtreeProfile {
    pub subtrees: [usize; 3],
    pub totals: [usize; 3],
    /// Zero for buckets without spans.
    pub proportions: [f64; 3],
}

/// Spans given as inclusive `(start, end)` ranges.
pub fn subtree_proportion(
    trees: &[DependencyTree],
    pruned_spans: &[Vec<(usize, usize)>],
) -> Result<SubtreeProfile> {
    let sets: Vec<Vec<BTreeSet<usize>>> = pruned_spans
        .iter()
        .map(|spans| spans.iter().map(|&(s, e)| (s..=e).collect()).collect())
        .collect();
    subtree_proportion_of_sets(trees, &sets)
}

/// Spans given as word sets; a span deleted in a later compression round may
/// be non-contiguous in the original sentence.
pub fn subtree_proportion_of_sets(
    trees: &[DependencyTree],
    pruned_spans: &[Vec<BTreeSet<usize>>],
) -> Result<SubtreeProfile> {
    if trees.len() != pruned_spans.len() {
        return Err(Error::LengthMismatch(format!(
            "{} trees, {} span lists",
            trees.len(),
            pruned_spans.len()
        )));
    }
    let mut subtrees = [0usize; 3];
    let mut totals = [0usize; 3];
    for (t, (tree, spans)) in trees.iter().zip(pruned_spans).enumerate() {
        for span in spans {
            if span.is_empty() || span.iter().any(|&k| k < 1 || k > tree.len()) {
                return Err(Error::InvalidEdit(format!(
                    "tree {}: span {span:?} outside 1..={}",
                    t + 1,
                    tree.len()
                )));
            }
            let bucket = span.len().min(3) - 1;
            totals[bucket] += 1;
            if tree.is_subtree(span) {
                subtrees[bucket] += 1;
            }
        }
    }
    let proportions = [0, 1, 2].map(|b| {
        if totals[b] == 0 {
            0.0
        } else {
            subtrees[b] as f64 / totals[b] as f64
        }
    });
    Ok(SubtreeProfile {
        subtrees,
        totals,
        proportions,
    })
}
