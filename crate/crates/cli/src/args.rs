use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndd::compress::{CompressionConfig, OverlapKeep};
use ndd::baselines::PplCeiling;
use ndd::WeightConfig;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ndd", version, about = "Score sentence edits with neighboring distribution divergence")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Inference backend; `onnx` needs a model bundle.
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,

    /// Model bundle directory (defaults to $NDD_MODEL_DIR).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Toy,
    Onnx,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// NDD, pseudo-perplexity and cosine similarity of one edit.
    Score(ScoreArgs),
    /// Compress sentences by deleting spans.
    Compress(CompressArgs),
    /// Kept-token F1 and BLEU on a compression corpus.
    EvalCompression(EvalCompressionArgs),
    /// Depth and subtree profile of pruned words on a CoNLL-U treebank.
    EvalPruning(EvalPruningArgs),
    /// mAP and AUC of predicate rankings on CoNLL-2009 data.
    EvalPredicates(EvalPredicatesArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub before: String,

    /// The edited sentence; the edit is inferred from the diff.
    #[arg(long, conflicts_with = "edit", required_unless_present = "edit")]
    pub after: Option<String>,

    /// Explicit edit `start:end[:replacement words]`, 1-based and inclusive.
    #[arg(long)]
    pub edit: Option<String>,

    /// Distance decay of the neighbor weights.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,

    /// Mirror the distance weights at the sentence boundaries.
    #[arg(long)]
    pub balanced: bool,

    /// Multiply in position weights `nu^k`.
    #[arg(long)]
    pub nu: Option<f64>,

    /// Print JSON with full precision.
    #[arg(long)]
    #[serde(skip)]
    pub json: bool,
}

impl ScoreArgs {
    pub fn weights(&self) -> CliResult<WeightConfig> {
        let w = WeightConfig {
            mu: self.mu,
            nu: self.nu.unwrap_or(1.0),
            balanced: self.balanced,
            positional: self.nu.is_some(),
        };
        w.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(w)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompressionFlags {
    /// Longest span considered for one deletion.
    #[arg(long, default_value_t = 9)]
    pub lmax: usize,

    /// Deletions must score below this NDD.
    #[arg(long, default_value_t = 1.0)]
    pub nddmax: f64,

    #[arg(long, default_value_t = 0.9)]
    pub mu: f64,

    #[arg(long, default_value_t = 0.9)]
    pub nu: f64,

    /// Use plain distance weights without the boundary term.
    #[arg(long)]
    pub unbalanced: bool,

    /// Leave out the position weights.
    #[arg(long)]
    pub no_position: bool,

    #[arg(long, default_value_t = 10)]
    pub max_iterations: usize,

    /// Which of two overlapping candidate spans survives.
    #[arg(long, value_enum, default_value_t = KeepArg::Lower)]
    pub overlap_keep: KeepArg,

    /// Perplexity ceiling of the PPL method, relative to the unedited
    /// sentence.
    #[arg(long, default_value_t = 1.25)]
    pub ppl_ceiling: f64,

    /// Use `--ppl-ceiling` as an absolute perplexity.
    #[arg(long)]
    pub ppl_absolute: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KeepArg {
    Lower,
    Higher,
}

impl CompressionFlags {
    pub fn config(&self, seed: u64) -> CliResult<CompressionConfig> {
        let config = CompressionConfig {
            l_max: self.lmax,
            ndd_max: self.nddmax,
            weights: WeightConfig {
                mu: self.mu,
                nu: self.nu,
                balanced: !self.unbalanced,
                positional: !self.no_position,
            },
            max_iterations: self.max_iterations,
            overlap_keep: match self.overlap_keep {
                KeepArg::Lower => OverlapKeep::Lower,
                KeepArg::Higher => OverlapKeep::Higher,
            },
            seed,
        };
        config.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(config)
    }

    pub fn ceiling(&self) -> CliResult<PplCeiling> {
        if !(self.ppl_ceiling > 0.0 && self.ppl_ceiling.is_finite()) {
            return Err(CliError::config(format!(
                "--ppl-ceiling must be positive, got {}",
                self.ppl_ceiling
            )));
        }
        Ok(if self.ppl_absolute {
            PplCeiling::Absolute(self.ppl_ceiling)
        } else {
            PplCeiling::Relative(self.ppl_ceiling)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// `jsonl` for `.jsonl` files, plain text otherwise.
    Auto,
    Plain,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CompressMethod {
    Ndd,
    Ppl,
}

#[derive(Debug, Args, Serialize)]
pub struct CompressArgs {
    /// One sentence per line, or JSON lines with a `sentence` field.
    #[arg(long, required_unless_present = "text", conflicts_with = "text")]
    pub input: Option<PathBuf>,

    /// A single sentence.
    #[arg(long)]
    pub text: Option<String>,

    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,

    #[arg(long, value_enum, default_value_t = CompressMethod::Ndd)]
    pub method: CompressMethod,

    #[command(flatten)]
    pub flags: CompressionFlags,

    /// Print one JSON trace per sentence instead of the compressed text.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalCompressionMethod {
    Ndd,
    Ppl,
    /// Deletes as many words as NDD compression, chosen at random.
    Random,
    /// Keeps every word.
    Unedited,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Write the report here; JSON for `.json` paths, text otherwise.
    #[arg(long)]
    pub report_out: Option<PathBuf>,

    /// Print the report as JSON.
    #[arg(long)]
    #[serde(skip)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalCompressionArgs {
    /// JSON lines with `sentence` and `compression` fields.
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, value_enum, default_value_t = EvalCompressionMethod::Ndd)]
    pub method: EvalCompressionMethod,

    #[command(flatten)]
    pub flags: CompressionFlags,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    #[serde(skip)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PruningMethod {
    Ndd,
    /// Deletes as many words as NDD pruning, as random runs.
    Random,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalPruningArgs {
    #[arg(long)]
    pub conllu: PathBuf,

    #[arg(long, value_enum, default_value_t = PruningMethod::Ndd)]
    pub method: PruningMethod,

    #[command(flatten)]
    pub flags: CompressionFlags,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    #[serde(skip)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EditionArg {
    Delete,
    Mask,
    Word,
    /// Product of the per-mode softmaxes.
    Ensemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerArg {
    Ndd,
    Ppl,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalPredicatesArgs {
    #[arg(long)]
    pub conll2009: PathBuf,

    #[arg(long, value_enum, default_value_t = EditionArg::Ensemble)]
    pub edition: EditionArg,

    /// Word used by the `word` edition.
    #[arg(long, default_value = "a")]
    pub replacement_word: String,

    #[arg(long, value_enum, default_value_t = ScorerArg::Ndd)]
    pub scorer: ScorerArg,

    /// Distance decay of the neighbor weights.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,

    /// Rank by the perplexity increase over the unedited sentence.
    #[arg(long)]
    pub ppl_delta: bool,

    #[command(flatten)]
    #[serde(skip)]
    pub report: ReportArgs,
}
