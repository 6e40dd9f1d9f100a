//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod oracles;

use std::collections::BTreeSet;
use std::panic;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use ndd::backend::toy::{NgramOracle, EMBEDDED_CORPUS};
use ndd::backend::MlmBackend;
use ndd::compress::{select_non_overlapping, span_search, CompressionConfig, OverlapKeep, SpanCandidate};
use ndd::eval::{
    auc, average_precision, bleu, corpus_bleu, depth_distribution, load_conllu,
    mean_average_precision, pairwise_auc, pruning_report, subtree_proportion_of_sets, token_f1,
    DependencyTree, SrlSentence,
};
use ndd::ndd::{balanced_distance_weights, distance_weights, neighbor_positions, position_weights};
use ndd::predicate::{ensemble_scores, word_edit_scores, EditionMode, RankingSource, WordRanking};
use ndd::ndd::ndd as ndd_profile;
use ndd::{kl_divergence, score_edit, EditOperation, Sentence, VocabDistribution, VocabId, WeightConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

/// Tracks the largest deviation seen so far.
#[derive(Default)]
struct MaxErr {
    value: f64,
    checks: usize,
}

impl MaxErr {
    fn see(&mut self, a: f64, b: f64, what: &str) -> Result<(), String> {
        let e = (a - b).abs();
        self.checks += 1;
        if e.is_nan() || (a.is_finite() != b.is_finite()) {
            return Err(format!("{what}: {a} vs {b}"));
        }
        self.value = self.value.max(e);
        Ok(())
    }

    fn all(&mut self, a: &[f64], b: &[f64], what: &str) -> Result<(), String> {
        if a.len() != b.len() {
            return Err(format!("{what}: lengths {} vs {}", a.len(), b.len()));
        }
        a.iter().zip(b).try_for_each(|(x, y)| self.see(*x, *y, what))
    }

    fn within(&self, tol: f64, what: &str) -> Result<(), String> {
        if self.value <= tol {
            Ok(())
        } else {
            Err(format!("{what}: max abs error {:.3e} > {tol:.0e}", self.value))
        }
    }
}

fn random_probs(rng: &mut ChaCha8Rng, v: usize) -> Vec<f64> {
    let mut raw: Vec<f64> = (0..v)
        .map(|_| match rng.gen_range(0..10) {
            0 | 1 => 0.0,
            2 => rng.gen::<f64>() * 1e-14,
            _ => rng.gen::<f64>(),
        })
        .collect();
    if raw.iter().all(|&x| x == 0.0) {
        raw[0] = 1.0;
    }
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, p: f64) -> BTreeSet<usize> {
    (1..=n).filter(|_| rng.gen_bool(p)).collect()
}

fn random_heads(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for t in 1..n {
        heads[order[t] - 1] = order[rng.gen_range(0..t)];
    }
    heads
}

fn tree_of(heads: Vec<usize>) -> DependencyTree {
    let n = heads.len();
    DependencyTree::new(
        (1..=n).map(|k| format!("w{k}")).collect(),
        heads,
        vec!["dep".to_owned(); n],
    )
    .expect("valid random tree")
}

fn ranking(scores: Vec<f64>) -> WordRanking {
    WordRanking {
        sentence: Sentence::new((0..scores.len()).map(|k| format!("w{k}"))).unwrap(),
        scores,
        source: RankingSource::Mode(EditionMode::Delete),
    }
}

const INSTANCES: usize = 1000;

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let id = VocabId(7);
    let mut report = Vec::new();

    let mut err = MaxErr::default();
    for _ in 0..INSTANCES {
        let v = rng.gen_range(2..12);
        let (p, q) = (random_probs(&mut rng, v), random_probs(&mut rng, v));
        let got = kl_divergence(
            &VocabDistribution::new(p.clone(), id).map_err(|e| e.to_string())?,
            &VocabDistribution::new(q.clone(), id).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        err.see(got, oracles::kl(&oracles::floor(&p), &oracles::floor(&q)).max(0.0), "kl")?;
    }
    err.within(1e-9, "kl")?;
    report.push(format!("kl {:.1e}", err.value));

    let mut err = MaxErr::default();
    for _ in 0..INSTANCES {
        let n = rng.gen_range(1..=20);
        let i = rng.gen_range(1..=n);
        let j = rng.gen_range(i..=n);
        let mu = if rng.gen_bool(0.1) { 1.0 } else { rng.gen_range(0.05..1.0) };
        let nu = if rng.gen_bool(0.1) { 1.0 } else { rng.gen_range(0.05..1.0) };
        let dist = oracles::distance(n, i, j, mu);
        let bal = oracles::balanced(n, i, j, mu);
        let pos = oracles::position(n, i, j, nu);
        if neighbor_positions(n, i, j) != oracles::neighbors(n, i, j) {
            return Err(format!("neighbor positions differ for n={n} i={i} j={j}"));
        }
        err.all(&distance_weights(n, i, j, mu).unwrap(), &dist, "distance weights")?;
        err.all(&balanced_distance_weights(n, i, j, mu).unwrap(), &bal, "balanced weights")?;
        err.all(&position_weights(&neighbor_positions(n, i, j), nu), &pos, "position weights")?;
        for (balanced, positional) in [(false, false), (true, false), (false, true), (true, true)] {
            let cfg = WeightConfig { mu, nu, balanced, positional };
            let base = if balanced { &bal } else { &dist };
            let expected: Vec<f64> = base
                .iter()
                .zip(&pos)
                .map(|(a, b)| if positional { a * b } else { *a })
                .collect();
            err.all(&cfg.weights(n, i, j).unwrap(), &expected, "composed weights")?;
        }
    }
    err.within(1e-9, "weights")?;
    report.push(format!("weights {:.1e}", err.value));

    let mut err = MaxErr::default();
    for _ in 0..INSTANCES {
        let m = rng.gen_range(0..8);
        let v = rng.gen_range(2..10);
        let before: Vec<Vec<f64>> = (0..m).map(|_| random_probs(&mut rng, v)).collect();
        let after: Vec<Vec<f64>> = (0..m).map(|_| random_probs(&mut rng, v)).collect();
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..2.0)).collect();
        let wrap = |d: &Vec<Vec<f64>>| -> Vec<VocabDistribution> {
            d.iter().map(|p| VocabDistribution::new(p.clone(), id).unwrap()).collect()
        };
        let profile = ndd_profile(&wrap(&before), &wrap(&after), &w).map_err(|e| e.to_string())?;
        let expected: f64 = (0..m)
            .map(|k| w[k] * oracles::kl(&oracles::floor(&after[k]), &oracles::floor(&before[k])).max(0.0))
            .sum();
        err.see(profile.score, expected, "ndd")?;
        err.see(profile.recompute_score(), profile.score, "ndd recompute")?;
    }
    err.within(1e-9, "ndd")?;
    report.push(format!("ndd {:.1e}", err.value));

    let mut err = MaxErr::default();
    for _ in 0..INSTANCES {
        let n = rng.gen_range(1..15);
        let s = random_set(&mut rng, n, 0.5);
        let g = random_set(&mut rng, n, 0.5);
        let f = token_f1(&s, &g);
        let (p, r, f1) = oracles::f1(&s, &g);
        err.all(&[f.precision, f.recall, f.f1], &[p, r, f1], "f1")?;
    }
    err.within(1e-9, "f1")?;
    report.push(format!("f1 {:.1e}", err.value));

    let mut err = MaxErr::default();
    let alphabet = ["a", "b", "c", "d"];
    let mut corpus: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    for t in 0..INSTANCES {
        let (c_len, r_len) = (rng.gen_range(1..10), rng.gen_range(1..10));
        let mut draw = |len: usize| -> Vec<String> {
            (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_owned()).collect()
        };
        let (c, r) = (draw(c_len), draw(r_len));
        let got = bleu(&c, &r, 4);
        let (p, smooth, raw) = oracles::bleu_from_counts(&oracles::bleu_counts(&c, &r, 4), c.len(), r.len());
        err.all(&got.precisions, &p, "bleu precisions")?;
        err.all(&[got.composite, got.composite_unsmoothed], &[smooth, raw], "bleu composite")?;
        corpus.push((c, r));
        if t % 10 == 9 {
            let got = corpus_bleu(corpus.iter().map(|(c, r)| (c.as_slice(), r.as_slice())), 4);
            let mut summed = vec![(0, 0, 0); 4];
            for (c, r) in &corpus {
                for (acc, x) in summed.iter_mut().zip(oracles::bleu_counts(c, r, 4)) {
                    *acc = (acc.0 + x.0, acc.1 + x.1, acc.2 + x.2);
                }
            }
            let c_len = corpus.iter().map(|(c, _)| c.len()).sum();
            let r_len = corpus.iter().map(|(_, r)| r.len()).sum();
            let (p, smooth, raw) = oracles::bleu_from_counts(&summed, c_len, r_len);
            err.all(&got.precisions, &p, "corpus bleu precisions")?;
            err.all(&[got.composite, got.composite_unsmoothed], &[smooth, raw], "corpus bleu")?;
            corpus.clear();
        }
    }
    err.within(1e-9, "bleu")?;
    report.push(format!("bleu {:.1e}", err.value));

    let mut depth_err = MaxErr::default();
    let mut subtree_err = MaxErr::default();
    for _ in 0..INSTANCES {
        let n = rng.gen_range(1..=12);
        let heads = random_heads(&mut rng, n);
        let tree = tree_of(heads.clone());
        let pruned = random_set(&mut rng, n, 0.4);
        let got = depth_distribution(std::slice::from_ref(&tree), std::slice::from_ref(&pruned))
            .map_err(|e| e.to_string())?;
        let mut counts = [0usize; 4];
        for &k in &pruned {
            counts[oracles::depth(&heads, k).min(4) - 1] += 1;
        }
        let total: usize = counts.iter().sum();
        let expected: Vec<f64> = counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect();
        depth_err.all(&got.proportions, &expected, "depth")?;

        let mut sets: Vec<BTreeSet<usize>> = Vec::new();
        for _ in 0..4 {
            let i = rng.gen_range(1..=n);
            let j = rng.gen_range(i..=n);
            sets.push((i..=j).collect());
            let s = random_set(&mut rng, n, 0.5);
            if !s.is_empty() {
                sets.push(s);
            }
        }
        let (mut hits, mut totals) = ([0usize; 3], [0usize; 3]);
        for s in &sets {
            let expected = oracles::is_subtree(&heads, s);
            if tree.is_subtree(s) != expected {
                return Err(format!("subtree decision differs for {s:?} in {heads:?}"));
            }
            totals[s.len().min(3) - 1] += 1;
            hits[s.len().min(3) - 1] += usize::from(expected);
        }
        let got = subtree_proportion_of_sets(std::slice::from_ref(&tree), &[sets])
            .map_err(|e| e.to_string())?;
        let expected: Vec<f64> = (0..3)
            .map(|b| if totals[b] == 0 { 0.0 } else { hits[b] as f64 / totals[b] as f64 })
            .collect();
        subtree_err.all(&got.proportions, &expected, "subtree")?;
    }
    depth_err.within(1e-9, "depth")?;
    subtree_err.within(1e-9, "subtree")?;
    report.push(format!("depth {:.1e}", depth_err.value));
    report.push(format!("subtree {:.1e}", subtree_err.value));

    let mut ap_err = MaxErr::default();
    let mut auc_err = MaxErr::default();
    let mut batch: Vec<(Vec<bool>, Vec<f64>)> = Vec::new();
    for t in 0..INSTANCES {
        let n = rng.gen_range(2..15);
        let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        let tied = rng.gen_bool(0.5);
        let scores: Vec<f64> = (0..n)
            .map(|_| if tied { rng.gen_range(0..4) as f64 / 4.0 } else { rng.gen() })
            .collect();
        match (average_precision(&labels, &scores), oracles::average_precision(&labels, &scores)) {
            (Some(a), Some(b)) => ap_err.see(a, b, "ap")?,
            (None, None) => {}
            (a, b) => return Err(format!("ap definedness differs: {a:?} vs {b:?}")),
        }
        match (pairwise_auc(&labels, &scores).ok(), oracles::auc(&labels, &scores)) {
            (Some(a), Some(b)) => auc_err.see(a, b, "auc")?,
            (None, None) => {}
            (a, b) => return Err(format!("auc definedness differs: {a:?} vs {b:?}")),
        }
        batch.push((labels, scores));
        if t % 10 == 9 {
            let gold: Vec<SrlSentence> = batch
                .iter()
                .map(|(l, s)| SrlSentence::new((0..s.len()).map(|k| format!("w{k}")).collect(), l.clone()).unwrap())
                .collect();
            let rankings: Vec<WordRanking> = batch.iter().map(|(_, s)| ranking(s.clone())).collect();
            let aps: Vec<f64> = batch
                .iter()
                .filter_map(|(l, s)| oracles::average_precision(l, s))
                .collect();
            match mean_average_precision(&rankings, &gold) {
                Ok(m) => ap_err.see(m, aps.iter().sum::<f64>() / aps.len() as f64, "map")?,
                Err(_) if aps.is_empty() => {}
                Err(e) => return Err(e.to_string()),
            }
            let pooled_l: Vec<bool> = batch.iter().flat_map(|(l, _)| l.clone()).collect();
            let pooled_s: Vec<f64> = batch.iter().flat_map(|(_, s)| s.clone()).collect();
            match (auc(&rankings, &gold).ok(), oracles::auc(&pooled_l, &pooled_s)) {
                (Some(a), Some(b)) => auc_err.see(a, b, "pooled auc")?,
                (None, None) => {}
                (a, b) => return Err(format!("pooled auc definedness differs: {a:?} vs {b:?}")),
            }
            batch.clear();
        }
    }
    ap_err.within(1e-9, "map")?;
    auc_err.within(1e-9, "auc")?;
    report.push(format!("map {:.1e}", ap_err.value));
    report.push(format!("auc {:.1e}", auc_err.value));
    Ok(format!("{INSTANCES} instances per metric; max abs error: {}", report.join(", ")))
}

fn fixture_sentences(count: usize) -> Vec<Sentence> {
    EMBEDDED_CORPUS
        .lines()
        .filter(|l| l.split_whitespace().count() >= 2)
        .take(count)
        .map(|l| Sentence::parse(l).unwrap())
        .collect()
}

fn criterion_2() -> Outcome {
    let sentences = fixture_sentences(40);
    let text: Vec<String> = sentences.iter().map(|s| s.to_string()).collect();
    let oracle = NgramOracle::from_corpus(text.iter().map(String::as_str)).unwrap();
    let vocab: Vec<String> = sentences.iter().flat_map(|s| s.words().to_vec()).collect();
    let configs = [
        WeightConfig::plain(1.0),
        WeightConfig::plain(0.9),
        WeightConfig::compression(0.9, 0.9),
    ];

    let mut identities = 0;
    for s in &sentences {
        for i in 1..=s.len() {
            for j in i..=(i + 2).min(s.len()) {
                let same = EditOperation::replacement(i, j, s.words()[i - 1..j].iter().cloned());
                for cfg in &configs {
                    let p = score_edit(&oracle, s, &same, cfg).map_err(|e| e.to_string())?;
                    if p.score != 0.0 || p.score.is_sign_negative() || p.divergences.iter().any(|&d| d != 0.0) {
                        return Err(format!("identity edit {i}..={j} of {s:?} scored {}", p.score));
                    }
                    identities += 1;
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let edits = 10_000;
    let mut min_score = f64::INFINITY;
    for _ in 0..edits {
        let s = &sentences[rng.gen_range(0..sentences.len())];
        let n = s.len();
        let i = rng.gen_range(1..=n);
        let j = rng.gen_range(i..=n);
        let edit = if rng.gen_bool(0.5) && !(i == 1 && j == n) {
            EditOperation::deletion(i, j)
        } else {
            let k = rng.gen_range(1..=3);
            EditOperation::replacement(
                i,
                j,
                (0..k).map(|_| {
                    if rng.gen_bool(0.05) {
                        "zyzzyva".to_owned()
                    } else {
                        vocab[rng.gen_range(0..vocab.len())].clone()
                    }
                }),
            )
        };
        let cfg = &configs[rng.gen_range(0..configs.len())];
        let p = score_edit(&oracle, s, &edit, cfg).map_err(|e| e.to_string())?;
        if !(p.score >= 0.0 && p.score.is_finite() && p.score.is_sign_positive()) || p.divergences.iter().any(|&d| d < 0.0) {
            return Err(format!("edit {edit:?} of {s:?} scored {}", p.score));
        }
        min_score = min_score.min(p.score);
    }
    Ok(format!(
        "{identities} identity edits scored exactly 0; {edits} random edits all >= 0 (min {min_score:.3e})"
    ))
}

/// Floored masked distribution at word `k` computed straight from the
/// oracle's n-gram tables.
fn direct_distribution(oracle: &NgramOracle, words: &[String], k: usize) -> Vec<f64> {
    let vocab = oracle.vocabulary();
    let mut ids = vec![vocab.cls_id];
    ids.extend(words.iter().map(|w| vocab.token_id(&w.to_lowercase()).unwrap_or(vocab.unk_id)));
    ids.push(vocab.sep_id);
    ids[k] = vocab.mask_id;
    oracles::floor(&oracle.predict(&ids, k))
}

fn criterion_3() -> Outcome {
    let oracle = NgramOracle::embedded();
    let sentences = fixture_sentences(100);
    let base = CompressionConfig::default();
    let mut err = MaxErr::default();
    let mut spans_checked = 0;
    for s in &sentences {
        let w = s.words();
        let n = w.len();
        let before: Vec<Vec<f64>> = (1..=n).map(|k| direct_distribution(&oracle, w, k)).collect();
        let mut exhaustive = Vec::new();
        for i in 1..=n {
            for j in i..=n {
                if j + 1 - i > base.l_max || (i == 1 && j == n) {
                    continue;
                }
                let edited: Vec<String> = w[..i - 1].iter().chain(&w[j..]).cloned().collect();
                let weights: Vec<f64> = oracles::balanced(n, i, j, base.weights.mu)
                    .iter()
                    .zip(oracles::position(n, i, j, base.weights.nu))
                    .map(|(a, b)| a * b)
                    .collect();
                let score: f64 = oracles::neighbors(n, i, j)
                    .iter()
                    .zip(&weights)
                    .map(|(&k, wt)| {
                        let shifted = if k < i { k } else { k - (j + 1 - i) };
                        let after = direct_distribution(&oracle, &edited, shifted);
                        wt * oracles::kl(&after, &before[k - 1]).max(0.0)
                    })
                    .sum();
                exhaustive.push((i, j, score));
            }
        }
        // threshold halfway between two middle scores so rounding cannot
        // move a span across it
        let mut sorted: Vec<f64> = exhaustive.iter().map(|e| e.2).collect();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        let mid = sorted.len() / 2;
        let threshold = if sorted.len() >= 2 {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[0] + 1.0
        };
        let config = CompressionConfig { ndd_max: threshold, ..base };
        let found = span_search(s, &oracle, &config).map_err(|e| e.to_string())?;
        let got: BTreeSet<(usize, usize)> = found.iter().map(|c| (c.start, c.end)).collect();
        let want: BTreeSet<(usize, usize)> = exhaustive
            .iter()
            .filter(|e| e.2 < threshold)
            .map(|e| (e.0, e.1))
            .collect();
        if got != want {
            return Err(format!("span sets differ for {s}: {got:?} vs {want:?}"));
        }
        for c in &found {
            let e = exhaustive.iter().find(|e| (e.0, e.1) == (c.start, c.end)).unwrap();
            err.see(c.score, e.2, "span score")?;
        }
        spans_checked += exhaustive.len();
    }
    err.within(1e-6, "span scores")?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trials = 1000;
    for _ in 0..trials {
        let n = rng.gen_range(2..16);
        let candidates: Vec<SpanCandidate> = (0..rng.gen_range(1..12))
            .map(|_| {
                let start = rng.gen_range(1..=n);
                let end = rng.gen_range(start..=(start + 3).min(n));
                SpanCandidate { start, end, score: rng.gen_range(0..5) as f64 / 4.0, profile: None }
            })
            .collect();
        for keep in [OverlapKeep::Lower, OverlapKeep::Higher] {
            let out = select_non_overlapping(&candidates, keep);
            for (a, x) in out.iter().enumerate() {
                if out[a + 1..].iter().any(|y| x.overlaps(y)) {
                    return Err(format!("overlapping selection from {candidates:?}"));
                }
                if !candidates.contains(x) {
                    return Err("selection invented a candidate".into());
                }
            }
            for _ in 0..3 {
                let mut shuffled = candidates.clone();
                shuffled.shuffle(&mut rng);
                if select_non_overlapping(&shuffled, keep) != out {
                    return Err(format!("selection depends on input order: {candidates:?}"));
                }
            }
        }
    }
    Ok(format!(
        "{} sentences, {spans_checked} spans match exhaustive search (score err {:.1e}); {trials} selections disjoint and order-invariant",
        sentences.len(),
        err.value
    ))
}

fn run_cli(args: &[&str], dir: &std::path::Path) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ndd"))
        .args(args)
        .current_dir(dir)
        .env_remove("NDD_MODEL_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "ndd {args:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn criterion_4() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("corpus.txt"), EMBEDDED_CORPUS).map_err(|e| e.to_string())?;
    let run = |jobs: &str| {
        run_cli(
            &["--backend", "toy", "--jobs", jobs, "compress", "--input", "corpus.txt", "--trace"],
            dir.path(),
        )
    };
    let serial = run("1")?;
    let parallel = run("8")?;
    if serial != parallel {
        return Err("--jobs 1 and --jobs 8 traces differ".into());
    }
    let max_iterations = CompressionConfig::default().max_iterations;
    let mut lines = 0;
    let mut deleted = 0;
    for (line, source) in serial.lines().zip(EMBEDDED_CORPUS.lines()) {
        lines += 1;
        let trace: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let source = words(source);
        let iterations = trace["iterations"].as_array().ok_or("trace without iterations")?;
        if iterations.is_empty() || iterations.len() > max_iterations {
            return Err(format!("{} iterations", iterations.len()));
        }
        let lens: Vec<usize> = iterations
            .iter()
            .map(|it| it["output"]["words"].as_array().map_or(0, Vec::len))
            .collect();
        let inputs: Vec<usize> = iterations
            .iter()
            .map(|it| it["input"]["words"].as_array().map_or(0, Vec::len))
            .collect();
        for (t, (&i, &o)) in inputs.iter().zip(&lens).enumerate() {
            let last = t + 1 == lens.len();
            if o > i || (o == i && !last) || o == 0 {
                return Err(format!("iteration {t} went from {i} to {o} words"));
            }
        }
        let kept: Vec<usize> = serde_json::from_value(trace["kept_positions"].clone()).map_err(|e| e.to_string())?;
        let final_words: Vec<String> =
            serde_json::from_value(trace["final_sentence"]["words"].clone()).map_err(|e| e.to_string())?;
        if kept.windows(2).any(|w| w[0] >= w[1]) || kept.iter().any(|&k| k < 1 || k > source.len()) {
            return Err(format!("kept positions {kept:?} are not a subsequence"));
        }
        let projected: Vec<String> = kept.iter().map(|&k| source[k - 1].clone()).collect();
        if projected != final_words {
            return Err(format!("output {final_words:?} is not a subsequence of {source:?}"));
        }
        deleted += source.len() - kept.len();
    }
    if lines != 200 {
        return Err(format!("{lines} traces for 200 sentences"));
    }
    Ok(format!(
        "200 sentences, traces identical under --jobs 1 and 8, {deleted} words deleted, every output a subsequence"
    ))
}

/// Toy training data where the verb carries the sentence: every
/// subsequence of each frame that keeps the verb is a training sentence,
/// so removing anything but the verb leaves a familiar context.
fn predicate_corpus() -> (Vec<String>, Vec<String>, Vec<&'static str>) {
    let frames = [
        ("dog", "chases", "cat"),
        ("girl", "reads", "book"),
        ("chef", "cooks", "soup"),
        ("boy", "kicks", "ball"),
        ("bird", "builds", "nest"),
        ("farmer", "plants", "seed"),
    ];
    let adjectives = ["big", "small", "old", "young"];
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (subject, verb, object) in frames {
        for a in adjectives {
            for b in adjectives {
                let full = words(&format!("the {a} {subject} {verb} the {b} {object} ."));
                for mask in 0u32..(1 << full.len()) {
                    if mask & (1 << 3) != 0 {
                        let sub: Vec<&str> = (0..full.len())
                            .filter(|k| mask & (1 << k) != 0)
                            .map(|k| full[k].as_str())
                            .collect();
                        train.push(sub.join(" "));
                    }
                }
            }
        }
        test.push(format!("the {subject} {verb} the {object} ."));
        test.push(format!("the old {subject} {verb} the big {object} ."));
        test.push(format!("the young {subject} {verb} the {object} ."));
    }
    (train, test, frames.iter().map(|f| f.1).collect())
}

fn criterion_5() -> Outcome {
    let (train, test, verbs) = predicate_corpus();
    let oracle = NgramOracle::from_corpus(train.iter().map(String::as_str)).map_err(|e| e.to_string())?;
    let modes = [
        EditionMode::Delete,
        EditionMode::ReplaceByMask,
        EditionMode::replace_by_word("a").unwrap(),
    ];
    let mut gold = Vec::new();
    let mut rankings = Vec::new();
    for text in &test {
        let s = Sentence::parse(text).unwrap();
        let flags = s.words().iter().map(|w| verbs.contains(&w.as_str())).collect();
        gold.push(SrlSentence::new(s.words().to_vec(), flags).unwrap());
        let per_mode = modes
            .iter()
            .map(|m| word_edit_scores(&s, &oracle, m, 1.0))
            .collect::<ndd::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        rankings.push(ensemble_scores(&per_mode).map_err(|e| e.to_string())?);
    }
    let map = mean_average_precision(&rankings, &gold).map_err(|e| e.to_string())?;
    let pooled = auc(&rankings, &gold).map_err(|e| e.to_string())?;
    let detail = format!("{} sentences, ensemble mAP {map:.3}, AUC {pooled:.3}", test.len());
    if map >= 0.9 && pooled >= 0.9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn set(v: &[usize]) -> BTreeSet<usize> {
    v.iter().copied().collect()
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let json_path = dir.path().join("report.json");
    let text = run_cli(
        &[
            "--backend",
            "toy",
            "eval-compression",
            "--data",
            "five_pairs.jsonl",
            "--method",
            "unedited",
            "--report-out",
            json_path.to_str().unwrap(),
        ],
        &fixtures(),
    )?;
    if text != golden("eval_compression_unedited.txt") {
        return Err(format!("compression report differs from golden:\n{text}"));
    }
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let smoothed = |ps: &[f64]| (ps.iter().map(|p| p.max(1e-9).ln()).sum::<f64>() / 4.0).exp();
    let sentence_bleu = (smoothed(&[4.0 / 7.0, 2.0 / 6.0, 1.0 / 5.0, 0.0])
        + smoothed(&[4.0 / 5.0, 2.0 / 4.0, 1.0 / 3.0, 0.0])
        + smoothed(&[3.0 / 6.0, 2.0 / 5.0, 1.0 / 4.0, 0.0])
        + smoothed(&[4.0 / 6.0, 2.0 / 5.0, 1.0 / 4.0, 0.0])
        + 1.0)
        / 5.0;
    let expected = [
        ("pairs", 5.0),
        ("precision", (4.0 / 7.0 + 4.0 / 5.0 + 1.0 / 2.0 + 2.0 / 3.0 + 1.0) / 5.0),
        ("recall", 1.0),
        ("f1", (8.0 / 11.0 + 8.0 / 9.0 + 2.0 / 3.0 + 4.0 / 5.0 + 1.0) / 5.0),
        ("bleu_1", 17.0 / 26.0),
        ("bleu_2", 9.0 / 21.0),
        ("bleu_3", 4.0 / 16.0),
        ("bleu_4", 0.0),
        ("bleu", smoothed(&[17.0 / 26.0, 9.0 / 21.0, 4.0 / 16.0, 0.0])),
        ("bleu_unsmoothed", 0.0),
        ("sentence_bleu", sentence_bleu),
        ("compression_rate", 1.0),
        ("skipped_pairs", 0.0),
    ];
    let mut err = MaxErr::default();
    for (name, value) in expected {
        let got = report["metrics"][name].as_f64().ok_or(format!("metric {name} missing"))?;
        err.see(got, value, name)?;
    }
    if report["metrics"].as_object().map_or(0, |m| m.len()) != expected.len() {
        return Err("unexpected extra metrics in the compression report".into());
    }
    err.within(1e-12, "compression report")?;

    let trees = load_conllu(fixtures().join("three_trees.conllu")).map_err(|e| e.to_string())?;
    let depths: Vec<Vec<usize>> = trees.iter().map(|t| (1..=t.len()).map(|k| t.depth(k)).collect()).collect();
    let hand = vec![
        vec![2, 2, 1, 3, 3, 2, 3, 3, 3, 2],
        vec![3, 2, 1, 3, 3, 2, 2],
        vec![2, 4, 4, 4, 3, 1, 2],
    ];
    if depths != hand {
        return Err(format!("fixture depths {depths:?} differ from the hand parse"));
    }
    let spans = vec![
        vec![set(&[7, 8, 9, 10]), set(&[5])],
        vec![set(&[1, 2]), set(&[4, 5]), set(&[7])],
        vec![set(&[2, 3, 4, 5]), set(&[7])],
    ];
    let mut report = pruning_report(&trees, &spans).map_err(|e| e.to_string())?;
    report.command = "eval-pruning".into();
    report.corpus = vec!["three_trees.conllu".into()];
    let text = report.to_text();
    if text != golden("pruning_three_trees.txt") {
        return Err(format!("pruning report differs from golden:\n{text}"));
    }
    let mut err = MaxErr::default();
    for (name, value) in [
        ("depth_1", 0.0),
        ("depth_2", 4.0 / 15.0),
        ("depth_3", 8.0 / 15.0),
        ("depth_4plus", 3.0 / 15.0),
        ("subtree_1", 1.0),
        ("subtree_2", 0.5),
        ("subtree_3plus", 1.0),
        ("pruned_rate", 15.0 / 24.0),
    ] {
        err.see(report.metrics[name], value, name)?;
    }
    err.within(1e-12, "pruning report")?;
    Ok("5-pair compression report and 3-tree pruning report match the hand-computed goldens".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("metric correctness against brute-force oracles", criterion_1),
        ("identity edits score 0, all scores non-negative", criterion_2),
        ("span search equals exhaustive enumeration; selection disjoint and order-invariant", criterion_3),
        ("compress terminates, deletes only, deterministic across --jobs", criterion_4),
        ("predicate ensemble separates gold verbs", criterion_5),
        ("golden reports reproduce", criterion_6),
    ];
    let started = Instant::now();
    let mut failures = 0;
    for (index, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|payload| {
            Err(payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} [{detail}] ({secs:.1}s)", index + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {}: FAIL  {name}: {why} ({secs:.1}s)", index + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failures,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
