use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndd::backend::{cosine_similarity, pseudo_perplexity, sentence_embedding, MlmBackend};
use ndd::baselines::ppl_compress;
use ndd::compress::{compress, random_deletion_positions, CompressionConfig, CompressionTrace};
use ndd::eval::{
    compression_report, load_compression_jsonl, load_conll2009, load_conllu, predicate_report,
    pruning_report, EvalReport,
};
use ndd::predicate::{ensemble_scores, ppl_word_scores, word_edit_scores, EditionMode, WordRanking};
use ndd::{score_edit, EditOperation, Sentence};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{
    CompressArgs, CompressMethod, EditionArg, EvalCompressionArgs, EvalCompressionMethod,
    EvalPredicatesArgs, EvalPruningArgs, InputFormat, PruningMethod, ReportArgs, ScoreArgs,
    ScorerArg,
};
use crate::diff::{infer_edit, parse_edit};
use crate::error::{CliError, CliResult};

fn sentence_arg(flag: &str, text: &str) -> CliResult<Sentence> {
    Sentence::parse(text).map_err(|e| CliError::config(format!("--{flag}: {e}")))
}

/// The edit to score, and whether it came from identical sentences.
fn resolve_edit(args: &ScoreArgs, before: &Sentence) -> CliResult<(EditOperation, bool)> {
    let edit = match (&args.edit, &args.after) {
        (Some(spec), _) => Some(parse_edit(spec)?),
        (None, Some(after)) => infer_edit(before, &sentence_arg("after", after)?)?,
        (None, None) => return Err(CliError::config("pass --after or --edit")),
    };
    match edit {
        Some(edit) => {
            edit.validate(before)
                .map_err(|e| CliError::config(format!("--edit: {e}")))?;
            Ok((edit, false))
        }
        // scored as replacing the first word by itself
        None => Ok((EditOperation::replacement(1, 1, [before.words()[0].as_str()]), true)),
    }
}

pub fn validate_score(args: &ScoreArgs) -> CliResult<()> {
    args.weights()?;
    let before = sentence_arg("before", &args.before)?;
    resolve_edit(args, &before).map(|_| ())
}

fn describe_edit(edit: &EditOperation, identity: bool) -> String {
    if identity {
        "none (identical sentences)".to_owned()
    } else if edit.replacement.is_empty() {
        format!("delete words {}..={}", edit.start, edit.end)
    } else {
        format!(
            "replace words {}..={} with {:?}",
            edit.start,
            edit.end,
            edit.replacement.join(" ")
        )
    }
}

pub fn score(args: &ScoreArgs, backend: &dyn MlmBackend, verbose: u8) -> CliResult<String> {
    let weights = args.weights()?;
    let before = sentence_arg("before", &args.before)?;
    let (edit, identity) = resolve_edit(args, &before)?;
    let after = before.apply(&edit)?;
    let profile = score_edit(backend, &before, &edit, &weights)?;
    let ppl_before = pseudo_perplexity(backend, &before)?;
    let ppl_after = pseudo_perplexity(backend, &after)?;
    let cosine = if backend.supports_embeddings() {
        Some(cosine_similarity(
            &sentence_embedding(backend, &before)?,
            &sentence_embedding(backend, &after)?,
        )?)
    } else {
        None
    };
    if args.json {
        let value = json!({
            "before": before.to_string(),
            "after": after.to_string(),
            "edit": if identity { Value::Null } else { json!(edit) },
            "weights": weights,
            "ndd": profile.score,
            "profile": profile,
            "ppl_before": ppl_before,
            "ppl_after": ppl_after,
            "cosine": cosine,
        });
        return Ok(serde_json::to_string_pretty(&value).expect("finite values") + "\n");
    }
    let mut out = String::new();
    let _ = writeln!(out, "before  {before}");
    let _ = writeln!(out, "after   {after}");
    let _ = writeln!(out, "edit    {}", describe_edit(&edit, identity));
    let _ = writeln!(out, "ndd     {:.2}", profile.score);
    let _ = writeln!(out, "ppl     {ppl_before:.2} -> {ppl_after:.2}");
    match cosine {
        Some(c) => {
            let _ = writeln!(out, "cosine  {c:.4}");
        }
        None => {
            let _ = writeln!(out, "cosine  n/a");
        }
    }
    if verbose > 0 {
        let width = profile
            .neighbor_positions
            .iter()
            .map(|&k| before.words()[k - 1].chars().count())
            .max()
            .unwrap_or(4)
            .max(4);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>4}  {:<width$}  {:>10}  {:>8}  {:>10}", "pos", "word", "kl", "weight", "weighted");
        for ((&k, &d), &w) in profile
            .neighbor_positions
            .iter()
            .zip(&profile.divergences)
            .zip(&profile.weights)
        {
            let _ = writeln!(
                out,
                "{k:>4}  {:<width$}  {d:>10.6}  {w:>8.4}  {:>10.6}",
                before.words()[k - 1],
                d * w
            );
        }
    }
    Ok(out)
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn read_sentences(args: &CompressArgs) -> CliResult<Vec<Sentence>> {
    let Some(path) = &args.input else {
        let text = args.text.as_deref().unwrap_or_default();
        return Ok(vec![sentence_arg("text", text)?]);
    };
    let jsonl = match args.format {
        InputFormat::Jsonl => true,
        InputFormat::Plain => false,
        InputFormat::Auto => path.extension().is_some_and(|e| e == "jsonl"),
    };
    let text = read(path)?;
    let mut sentences = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |message: String| CliError::data(format!("{}:{}: {message}", path.display(), index + 1));
        let raw = if jsonl {
            let value: Value = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
            match value.get("sentence").and_then(Value::as_str) {
                Some(s) => s.to_owned(),
                None => return Err(at("missing string field \"sentence\"".into())),
            }
        } else {
            line.to_owned()
        };
        sentences.push(Sentence::parse(&raw).map_err(|e| at(e.to_string()))?);
    }
    Ok(sentences)
}

fn run_compression(
    sentence: &Sentence,
    backend: &dyn MlmBackend,
    method: CompressMethod,
    config: &CompressionConfig,
    args_flags: &crate::args::CompressionFlags,
) -> CliResult<CompressionTrace> {
    Ok(match method {
        CompressMethod::Ndd => compress(sentence, backend, config)?,
        CompressMethod::Ppl => ppl_compress(sentence, backend, config, args_flags.ceiling()?)?,
    })
}

pub fn validate_compress(args: &CompressArgs) -> CliResult<()> {
    args.flags.config(0)?;
    args.flags.ceiling()?;
    if let Some(text) = &args.text {
        sentence_arg("text", text)?;
    }
    Ok(())
}

pub fn compress_cmd(args: &CompressArgs, backend: &dyn MlmBackend) -> CliResult<String> {
    let config = args.flags.config(0)?;
    let sentences = read_sentences(args)?;
    let traces = sentences
        .par_iter()
        .map(|s| run_compression(s, backend, args.method, &config, &args.flags))
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = String::new();
    for trace in &traces {
        if args.trace {
            let _ = writeln!(out, "{}", serde_json::to_string(trace).expect("finite values"));
        } else {
            let _ = writeln!(out, "{}", trace.final_sentence);
        }
    }
    Ok(out)
}

/// Seed of the random baseline for the `index`-th sentence.
pub fn sentence_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Kept positions after deleting `k` random words of an `n`-word sentence.
fn random_kept(n: usize, k: usize, seed: u64) -> CliResult<BTreeSet<usize>> {
    if k == 0 {
        return Ok((1..=n).collect());
    }
    let deleted = random_deletion_positions(n, k, seed)?;
    Ok((1..=n).filter(|p| deleted.binary_search(p).is_err()).collect())
}

fn config_echo(
    command: &str,
    args: &impl serde::Serialize,
    backend: &Value,
    config: Option<&CompressionConfig>,
) -> Value {
    json!({
        "command": command,
        "arguments": args,
        "backend": backend,
        "compression": config,
    })
}

fn emit(report: &EvalReport, args: &ReportArgs) -> CliResult<String> {
    if let Some(path) = &args.report_out {
        report
            .write(path)
            .map_err(|e| CliError::data(format!("writing the report: {e}")))?;
    }
    Ok(if args.json {
        report.to_json() + "\n"
    } else {
        report.to_text()
    })
}

pub fn validate_eval_compression(args: &EvalCompressionArgs) -> CliResult<()> {
    args.flags.config(args.seed)?;
    args.flags.ceiling()?;
    Ok(())
}

pub fn eval_compression(
    args: &EvalCompressionArgs,
    backend: &dyn MlmBackend,
    backend_desc: &Value,
) -> CliResult<String> {
    let config = args.flags.config(args.seed)?;
    let corpus = load_compression_jsonl(&args.data).map_err(|e| CliError::data(e.to_string()))?;
    if corpus.pairs.is_empty() {
        return Err(CliError::data(format!(
            "{}: no usable compression pairs",
            args.data.display()
        )));
    }
    let kept = corpus
        .pairs
        .par_iter()
        .enumerate()
        .map(|(index, pair)| {
            let n = pair.source.len();
            Ok(match args.method {
                EvalCompressionMethod::Unedited => (1..=n).collect(),
                EvalCompressionMethod::Ndd => compress(&pair.source, backend, &config)?
                    .kept_positions
                    .into_iter()
                    .collect(),
                EvalCompressionMethod::Ppl => {
                    ppl_compress(&pair.source, backend, &config, args.flags.ceiling()?)?
                        .kept_positions
                        .into_iter()
                        .collect()
                }
                EvalCompressionMethod::Random => {
                    let k = compress(&pair.source, backend, &config)?.deleted_count();
                    random_kept(n, k, sentence_seed(args.seed, index))?
                }
            })
        })
        .collect::<CliResult<Vec<BTreeSet<usize>>>>()?;
    let mut report = compression_report(&corpus.pairs, &kept)?;
    report.command = "eval-compression".into();
    report.corpus = vec![args.data.display().to_string()];
    report.config = config_echo("eval-compression", args, backend_desc, Some(&config));
    report.metric("skipped_pairs", corpus.skipped_lines.len() as f64);
    if !corpus.skipped_lines.is_empty() {
        report.note(
            "skipped_lines",
            corpus
                .skipped_lines
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    if args.method == EvalCompressionMethod::Random {
        report.note(
            "random",
            "each sentence loses as many words as NDD compression removes, drawn uniformly",
        );
    }
    emit(&report, &args.report)
}

/// Maximal runs of consecutive positions.
pub fn runs(positions: &[usize]) -> Vec<BTreeSet<usize>> {
    let mut out: Vec<BTreeSet<usize>> = Vec::new();
    for &p in positions {
        match out.last_mut() {
            Some(run) if run.last() == Some(&(p - 1)) => {
                run.insert(p);
            }
            _ => out.push(BTreeSet::from([p])),
        }
    }
    out
}

pub fn validate_eval_pruning(args: &EvalPruningArgs) -> CliResult<()> {
    args.flags.config(args.seed).map(|_| ())
}

pub fn eval_pruning(
    args: &EvalPruningArgs,
    backend: &dyn MlmBackend,
    backend_desc: &Value,
) -> CliResult<String> {
    let config = args.flags.config(args.seed)?;
    let trees = load_conllu(&args.conllu).map_err(|e| CliError::data(e.to_string()))?;
    if trees.is_empty() {
        return Err(CliError::data(format!("{}: no trees", args.conllu.display())));
    }
    let spans = trees
        .par_iter()
        .enumerate()
        .map(|(index, tree)| {
            let sentence = Sentence::new(tree.words.iter().cloned())
                .map_err(|e| CliError::data(format!("tree {}: {e}", index + 1)))?;
            let trace = compress(&sentence, backend, &config)?;
            Ok(match args.method {
                PruningMethod::Ndd => trace
                    .pruned_spans()
                    .into_iter()
                    .map(|s| s.into_iter().collect())
                    .collect(),
                PruningMethod::Random => {
                    let n = sentence.len();
                    let kept = random_kept(n, trace.deleted_count(), sentence_seed(args.seed, index))?;
                    let deleted: Vec<usize> = (1..=n).filter(|p| !kept.contains(p)).collect();
                    runs(&deleted)
                }
            })
        })
        .collect::<CliResult<Vec<Vec<BTreeSet<usize>>>>>()?;
    let mut report = pruning_report(&trees, &spans)?;
    report.command = "eval-pruning".into();
    report.corpus = vec![args.conllu.display().to_string()];
    report.config = config_echo("eval-pruning", args, backend_desc, Some(&config));
    if args.method == PruningMethod::Random {
        report.note(
            "random",
            "each tree loses as many words as NDD pruning removes; spans are the runs of deleted words",
        );
    }
    emit(&report, &args.report)
}

fn modes(args: &EvalPredicatesArgs) -> CliResult<Vec<EditionMode>> {
    let word = || {
        EditionMode::replace_by_word(args.replacement_word.clone())
            .map_err(|e| CliError::config(e.to_string()))
    };
    Ok(match (args.edition, args.scorer) {
        (EditionArg::Delete, _) => vec![EditionMode::Delete],
        (EditionArg::Mask, _) => vec![EditionMode::ReplaceByMask],
        (EditionArg::Word, ScorerArg::Ndd) => vec![word()?],
        (EditionArg::Word, ScorerArg::Ppl) => {
            return Err(CliError::config(
                "--scorer ppl supports the delete, mask and ensemble editions",
            ))
        }
        (EditionArg::Ensemble, ScorerArg::Ndd) => {
            vec![EditionMode::Delete, EditionMode::ReplaceByMask, word()?]
        }
        (EditionArg::Ensemble, ScorerArg::Ppl) => {
            vec![EditionMode::Delete, EditionMode::ReplaceByMask]
        }
    })
}

pub fn validate_eval_predicates(args: &EvalPredicatesArgs) -> CliResult<()> {
    modes(args)?;
    ndd::WeightConfig::plain(args.mu)
        .validate()
        .map_err(|e| CliError::config(e.to_string()))
}

pub fn eval_predicates(
    args: &EvalPredicatesArgs,
    backend: &dyn MlmBackend,
    backend_desc: &Value,
) -> CliResult<String> {
    let modes = modes(args)?;
    let all = load_conll2009(&args.conll2009).map_err(|e| CliError::data(e.to_string()))?;
    let (gold, short): (Vec<_>, Vec<_>) = all.into_iter().partition(|s| s.words.len() >= 2);
    if gold.is_empty() {
        return Err(CliError::data(format!(
            "{}: no sentence with two or more words",
            args.conll2009.display()
        )));
    }
    let rankings = gold
        .par_iter()
        .enumerate()
        .map(|(index, g)| {
            let sentence = g
                .sentence()
                .map_err(|e| CliError::data(format!("sentence {}: {e}", index + 1)))?;
            let per_mode = modes
                .iter()
                .map(|mode| match args.scorer {
                    ScorerArg::Ndd => word_edit_scores(&sentence, backend, mode, args.mu),
                    ScorerArg::Ppl => ppl_word_scores(&sentence, backend, mode, args.ppl_delta),
                })
                .collect::<ndd::Result<Vec<WordRanking>>>()?;
            Ok(if per_mode.len() == 1 {
                per_mode.into_iter().next().expect("one mode")
            } else {
                ensemble_scores(&per_mode)?
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut report = predicate_report(&rankings, &gold)?;
    report.command = "eval-predicates".into();
    report.corpus = vec![args.conll2009.display().to_string()];
    report.config = config_echo("eval-predicates", args, backend_desc, None);
    report.metric("skipped_sentences", short.len() as f64);
    emit(&report, &args.report)
}
