//! Datasets and metrics.

mod bleu;
mod io;
mod ranking;
mod report;
mod tree;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use bleu::{bleu, corpus_bleu, BleuCounts, BleuScore, BLEU_EPSILON};
pub use io::{
    align_subsequence, load_compression_jsonl, load_conll2009, load_conllu, parse_compression_jsonl,
    parse_conll2009, parse_conllu, write_compression_jsonl, write_conll2009, write_conllu,
    CompressionCorpus, CompressionPair, SrlSentence,
};
pub use ranking::{auc, average_precision, macro_auc, mean_average_precision, pairwise_auc};
pub use report::{compression_report, predicate_report, pruning_report, EvalReport};
pub use tree::{
    depth_distribution, subtree_proportion, subtree_proportion_of_sets, DependencyTree,
    DepthProfile, SubtreeProfile,
};

/// Precision, recall and F1 of a kept-token set against the gold one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Kept-token F1. Both sets empty counts as perfect agreement; exactly one
/// empty scores zero.
pub fn token_f1(system: &BTreeSet<usize>, gold: &BTreeSet<usize>) -> F1 {
    match (system.is_empty(), gold.is_empty()) {
        (true, true) => F1 {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        },
        (true, false) | (false, true) => F1 {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        },
        (false, false) => {
            let common = system.intersection(gold).count() as f64;
            let precision = common / system.len() as f64;
            let recall = common / gold.len() as f64;
            let f1 = if common == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            F1 {
                precision,
                recall,
                f1,
            }
        }
    }
}
