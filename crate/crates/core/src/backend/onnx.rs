//! Transformer masked LM loaded from a model bundle directory:
//!
//! * `model.onnx`: inputs `input_ids` and `attention_mask` (int64,
//!   `[batch, len]`), outputs logits (float32, `[batch, len, c]`) and final
//!   hidden states (float32, `[batch, len, h]`).
//! * `vocab.txt`: one token per line, id = 0-based line number.
//! * `bundle.json`: [`BundleConfig`].
//! * `parity.json`: reference probabilities written at export time
//!   ([`ParityFile`]).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tract_onnx::prelude::*;

use super::{MaskedSequence, MlmBackend, SpecialTokens, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleConfig {
    pub max_len: usize,
    pub hidden_size: usize,
    #[serde(default)]
    pub vocab_size: Option<usize>,
    pub cased: bool,
    #[serde(default)]
    pub special_tokens: SpecialTokens,
    #[serde(default)]
    pub source_model: Option<String>,
}

/// Expected top-k probabilities for masked words of a few probe sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityFile {
    pub top_k: usize,
    pub tolerance: f64,
    pub probes: Vec<ParityProbe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityProbe {
    pub sentence: String,
    #[serde(default)]
    pub token_ids: Option<Vec<u32>>,
    pub positions: Vec<ParityPosition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityPosition {
    pub word_index: usize,
    /// `(token id, probability)`, most probable first.
    pub top: Vec<(u32, f64)>,
}

impl ParityFile {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

type Plan = Arc<TypedRunnableModel>;

// Graphs whose shapes tract cannot reason about symbolically (typically
// attention-mask expansion producing `len * len`) get one concrete plan per
// sequence length instead.
enum Plans {
    Symbolic(Plan),
    PerLength {
        model: InferenceModel,
        cache: Mutex<HashMap<usize, Plan>>,
    },
}

impl Plans {
    fn build(model: InferenceModel) -> Self {
        match model.clone().into_optimized().and_then(|m| m.into_runnable()) {
            Ok(plan) => Plans::Symbolic(plan),
            Err(_) => Plans::PerLength {
                model,
                cache: Mutex::new(HashMap::new()),
            },
        }
    }

    fn for_length(&self, len: usize) -> Result<Plan> {
        match self {
            Plans::Symbolic(plan) => Ok(plan.clone()),
            Plans::PerLength { model, cache } => {
                if let Some(plan) = cache.lock().expect("plan cache poisoned").get(&len) {
                    return Ok(plan.clone());
                }
                let plan = model
                    .clone()
                    .with_input_fact(0, i64::fact([1, len]).into())
                    .and_then(|m| m.with_input_fact(1, i64::fact([1, len]).into()))
                    .and_then(|m| m.into_optimized())
                    .and_then(|m| m.into_runnable())
                    .map_err(|e| Error::Backend(format!("planning length {len}: {e:#}")))?;
                cache
                    .lock()
                    .expect("plan cache poisoned")
                    .insert(len, plan.clone());
                Ok(plan)
            }
        }
    }
}

pub struct OnnxBackend {
    plans: Plans,
    vocab: Vocabulary,
    config: BundleConfig,
    dir: PathBuf,
    logits_output: usize,
}

impl std::fmt::Debug for OnnxBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OnnxBackend")
            .field("dir", &self.dir)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl OnnxBackend {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_owned();
        let config: BundleConfig = read_json(&dir.join("bundle.json"))?;
        let vocab = Vocabulary::from_file(
            &dir.join("vocab.txt"),
            &config.special_tokens,
            config.cased,
        )?;
        if let Some(size) = config.vocab_size {
            if size != vocab.len() {
                return Err(Error::Backend(format!(
                    "bundle.json declares {size} tokens, vocab.txt has {}",
                    vocab.len()
                )));
            }
        }
        let model_path = dir.join("model.onnx");
        if !model_path.is_file() {
            return Err(Error::Backend(format!("{} not found", model_path.display())));
        }
        let model = tract_onnx::onnx()
            .model_for_path(&model_path)
            .map_err(|e| Error::Backend(format!("loading {}: {e:#}", model_path.display())))?;
        let mut backend = OnnxBackend {
            plans: Plans::build(model),
            vocab,
            config,
            dir,
            logits_output: 0,
        };
        backend.logits_output = backend.probe_output_layout()?;
        Ok(backend)
    }

    pub fn config(&self) -> &BundleConfig {
        &self.config
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    // Runs a two-token sequence and picks the output whose last axis is the
    // vocabulary size.
    fn probe_output_layout(&self) -> Result<usize> {
        let outputs = self.run(&[self.vocab.cls_id, self.vocab.sep_id])?;
        if outputs.len() < 2 {
            return Err(Error::Backend(format!(
                "model has {} outputs, expected logits and hidden states",
                outputs.len()
            )));
        }
        let last_dim = |t: &TValue| t.shape().last().copied().unwrap_or(0);
        let c = self.vocab.len();
        let h = self.config.hidden_size;
        match (last_dim(&outputs[0]), last_dim(&outputs[1])) {
            (a, b) if a == c && b == h => Ok(0),
            (a, b) if a == h && b == c => Ok(1),
            (a, b) => Err(Error::Backend(format!(
                "output widths ({a}, {b}) match neither vocabulary size {c} nor hidden size {h}"
            ))),
        }
    }

    fn run(&self, ids: &[u32]) -> Result<TVec<TValue>> {
        if ids.len() > self.config.max_len {
            return Err(Error::SequenceTooLong {
                len: ids.len(),
                limit: self.config.max_len,
            });
        }
        if let Some(id) = ids.iter().find(|&&id| id as usize >= self.vocab.len()) {
            return Err(Error::Backend(format!("token id {id} outside the vocabulary")));
        }
        let len = ids.len();
        let input_ids: Tensor = tract_ndarray::Array2::from_shape_vec(
            (1, len),
            ids.iter().map(|&x| i64::from(x)).collect(),
        )
        .map_err(|e| Error::Backend(e.to_string()))?
        .into();
        let attention: Tensor = tract_ndarray::Array2::<i64>::ones((1, len)).into();
        self.plans
            .for_length(len)?
            .run(tvec!(input_ids.into(), attention.into()))
            .map_err(|e| Error::Backend(format!("inference failed: {e:#}")))
    }

    fn row(output: &TValue, position: usize, width: usize) -> Result<Vec<f64>> {
        let view = output
            .to_plain_array_view::<f32>()
            .map_err(|e| Error::Backend(format!("unexpected output type: {e}")))?;
        let shape = view.shape();
        if shape.len() != 3 || shape[0] != 1 || position >= shape[1] || shape[2] != width {
            return Err(Error::Backend(format!(
                "output shape {shape:?} does not fit position {position} and width {width}"
            )));
        }
        Ok(view
            .slice(tract_ndarray::s![0, position, ..])
            .iter()
            .map(|&x| f64::from(x))
            .collect())
    }
}

impl MlmBackend for OnnxBackend {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn max_len(&self) -> usize {
        self.config.max_len
    }

    // One sequence per inference call: padding a mixed-length batch would
    // let results depend on batch composition.
    fn mask_logits(&self, batch: &[MaskedSequence]) -> Result<Vec<Vec<f64>>> {
        batch
            .iter()
            .map(|seq| {
                let outputs = self.run(&seq.token_ids)?;
                Self::row(
                    &outputs[self.logits_output],
                    seq.mask_position,
                    self.vocab.len(),
                )
            })
            .collect()
    }

    fn supports_embeddings(&self) -> bool {
        true
    }

    fn hidden_states(&self, token_ids: &[u32]) -> Result<Vec<Vec<f64>>> {
        let outputs = self.run(token_ids)?;
        let hidden = &outputs[1 - self.logits_output];
        (0..token_ids.len())
            .map(|p| Self::row(hidden, p, self.config.hidden_size))
            .collect()
    }
}
