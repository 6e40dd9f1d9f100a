use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    auc, average_precision, bleu, depth_distribution, macro_auc, mean_average_precision,
    subtree_proportion_of_sets, token_f1, BleuCounts, CompressionPair, DependencyTree,
    SrlSentence,
};
use crate::predicate::WordRanking;
use crate::{Error, Result};

/// Results of one evaluation run. Aggregates in `metrics` are recomputable
/// from `records`; `config` holds the full effective configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub command: String,
    pub corpus: Vec<String>,
    pub config: Value,
    pub metrics: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, String>,
    pub records: Vec<Value>,
}

impl EvalReport {
    pub fn new(command: impl Into<String>, config: Value) -> Self {
        EvalReport {
            command: command.into(),
            config,
            ..Default::default()
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.metrics.insert(name.into(), value);
        self
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.notes.insert(key.into(), value.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite JSON")
    }

    /// Metrics, then notes, as two aligned columns.
    pub fn to_text(&self) -> String {
        let width = self
            .metrics
            .keys()
            .chain(self.notes.keys())
            .map(|k| k.len())
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.command);
        for c in &self.corpus {
            let _ = writeln!(out, "corpus: {c}");
        }
        for (name, value) in &self.metrics {
            let _ = writeln!(out, "  {name:<width$}  {value:>10.4}");
        }
        for (key, value) in &self.notes {
            let _ = writeln!(out, "  {key:<width$}  {value}");
        }
        out
    }

    /// JSON when the path ends in `.json`, text otherwise.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let body = if path.extension().is_some_and(|e| e == "json") {
            self.to_json() + "\n"
        } else {
            self.to_text()
        };
        fs::write(path, body).map_err(|e| Error::io(path, e))
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Kept-token F1 and BLEU of system compressions. `system_kept[i]` holds the
/// 1-based source positions the system kept for `pairs[i]`.
///
/// Metrics: `precision`, `recall`, `f1` (sentence means), `bleu_1`..`bleu_4`
/// and `bleu` (corpus level), `bleu_unsmoothed`, `sentence_bleu` (mean of
/// sentence composites) and `compression_rate` (kept over source words).
pub fn compression_report(
    pairs: &[CompressionPair],
    system_kept: &[BTreeSet<usize>],
) -> Result<EvalReport> {
    if pairs.len() != system_kept.len() {
        return Err(Error::LengthMismatch(format!(
            "{} pairs, {} system outputs",
            pairs.len(),
            system_kept.len()
        )));
    }
    if pairs.is_empty() {
        return Err(Error::DegenerateCorpus("no compression pairs to evaluate".into()));
    }
    let mut report = EvalReport::default();
    let mut corpus = BleuCounts::default();
    let (mut kept_words, mut source_words) = (0usize, 0usize);
    let mut f1s = Vec::new();
    let mut sentence_bleus = Vec::new();
    for (pair, kept) in pairs.iter().zip(system_kept) {
        let n = pair.source.len();
        if let Some(&k) = kept.iter().find(|&&k| k < 1 || k > n) {
            return Err(Error::InvalidEdit(format!(
                "system kept position {k} outside 1..={n}"
            )));
        }
        let system: Vec<String> = kept.iter().map(|&k| pair.source.words()[k - 1].clone()).collect();
        let gold = pair.compression();
        let f1 = token_f1(kept, &pair.gold_kept);
        let counts = BleuCounts::new(&system, &gold, 4);
        let sentence = bleu(&system, &gold, 4);
        corpus.add(&counts);
        kept_words += kept.len();
        source_words += n;
        f1s.push(f1);
        sentence_bleus.push(sentence.composite);
        report.records.push(json!({
            "source": pair.source.to_string(),
            "system": system.join(" "),
            "gold": gold.join(" "),
            "system_kept": kept,
            "gold_kept": pair.gold_kept,
            "precision": f1.precision,
            "recall": f1.recall,
            "f1": f1.f1,
            "bleu": sentence.composite,
            "bleu_counts": counts,
        }));
    }
    let corpus_score = corpus.score();
    report
        .metric("pairs", pairs.len() as f64)
        .metric("precision", mean(f1s.iter().map(|f| f.precision)))
        .metric("recall", mean(f1s.iter().map(|f| f.recall)))
        .metric("f1", mean(f1s.iter().map(|f| f.f1)))
        .metric("bleu", corpus_score.composite)
        .metric("bleu_unsmoothed", corpus_score.composite_unsmoothed)
        .metric("sentence_bleu", mean(sentence_bleus.iter().copied()))
        .metric(
            "compression_rate",
            if source_words == 0 {
                0.0
            } else {
                kept_words as f64 / source_words as f64
            },
        );
    for (n, p) in corpus_score.precisions.iter().enumerate() {
        report.metric(format!("bleu_{}", n + 1), *p);
    }
    report
        .note("f1_convention", "1 when system and gold both keep nothing, 0 when exactly one does")
        .note("bleu_smoothing", "zero n-gram precisions count as 1e-9 in bleu and sentence_bleu");
    Ok(report)
}

/// Depth-n and Subtree-n of pruned spans. `pruned_spans[i]` lists the word
/// sets deleted from `trees[i]`, one set per span.
///
/// Metrics: `depth_1`..`depth_3`, `depth_4plus`, `subtree_1`, `subtree_2`,
/// `subtree_3plus`, with the matching `spans_*` counts, `pruned_words` and
/// `pruned_rate` (pruned over all words).
pub fn pruning_report(
    trees: &[DependencyTree],
    pruned_spans: &[Vec<BTreeSet<usize>>],
) -> Result<EvalReport> {
    let subtrees = subtree_proportion_of_sets(trees, pruned_spans)?;
    let pruned_words: Vec<BTreeSet<usize>> = pruned_spans
        .iter()
        .map(|spans| spans.iter().flatten().copied().collect())
        .collect();
    let depths = depth_distribution(trees, &pruned_words)?;
    let mut report = EvalReport::default();
    for ((tree, spans), words) in trees.iter().zip(pruned_spans).zip(&pruned_words) {
        report.records.push(json!({
            "sentence": tree.words.join(" "),
            "spans": spans,
            "subtree": spans.iter().map(|s| tree.is_subtree(s)).collect::<Vec<_>>(),
            "depths": words.iter().map(|&k| tree.depth(k)).collect::<Vec<_>>(),
        }));
    }
    let total_words: usize = trees.iter().map(DependencyTree::len).sum();
    report
        .metric("sentences", trees.len() as f64)
        .metric("pruned_words", depths.total as f64)
        .metric(
            "pruned_rate",
            if total_words == 0 {
                0.0
            } else {
                depths.total as f64 / total_words as f64
            },
        );
    for (name, k) in [("depth_1", 0), ("depth_2", 1), ("depth_3", 2), ("depth_4plus", 3)] {
        report.metric(name, depths.proportions[k]);
    }
    for (suffix, k) in [("1", 0), ("2", 1), ("3plus", 2)] {
        report
            .metric(format!("subtree_{suffix}"), subtrees.proportions[k])
            .metric(format!("spans_{suffix}"), subtrees.totals[k] as f64);
    }
    if depths.empty {
        report.note("depth", "no words were pruned; depth proportions are all zero");
    }
    Ok(report)
}

/// mAP and AUC of word rankings against gold predicates.
///
/// Metrics: `map`, `auc` (pooled over all words), `macro_auc` (mean over
/// sentences with both classes), `sentences`, `words`, `predicates`.
pub fn predicate_report(rankings: &[WordRanking], gold: &[SrlSentence]) -> Result<EvalReport> {
    let map = mean_average_precision(rankings, gold)?;
    let pooled = auc(rankings, gold)?;
    let mut report = EvalReport::default();
    report.metric("map", map).metric("auc", pooled);
    match macro_auc(rankings, gold) {
        Ok(v) => {
            report.metric("macro_auc", v);
        }
        Err(e) => {
            report.note("macro_auc", e.to_string());
        }
    }
    let words: usize = gold.iter().map(|g| g.words.len()).sum();
    let predicates: usize = gold.iter().map(|g| g.predicate_positions().len()).sum();
    report
        .metric("sentences", gold.len() as f64)
        .metric("words", words as f64)
        .metric("predicates", predicates as f64)
        .note("ap_ties", "equal scores rank the earlier word first")
        .note("map_denominator", "sentences without a gold predicate are left out");
    for (r, g) in rankings.iter().zip(gold) {
        report.records.push(json!({
            "words": g.words,
            "is_predicate": g.is_predicate,
            "scores": r.scores,
            "ap": average_precision(&g.is_predicate, &r.scores),
        }));
    }
    Ok(report)
}
