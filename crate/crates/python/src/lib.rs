//! Python bindings. Sentences cross the boundary as whitespace-tokenized
//! strings or word lists; positions are 1-based, as in the Rust API.

use std::collections::BTreeSet;

use ndd_core::backend::toy::NgramOracle;
use ndd_core::backend::{cosine_similarity, pseudo_perplexity, sentence_embedding, MlmBackend};
use ndd_core::baselines::{ppl_compress, PplCeiling};
use ndd_core::compress::{compress, CompressionConfig, CompressionTrace, OverlapKeep};
use ndd_core::eval::{self, token_f1};
use ndd_core::predicate::{ensemble_scores, word_edit_scores, EditionMode};
use ndd_core::{EditOperation, Error, WeightConfig};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Backend(_) | Error::VocabMismatch { .. } | Error::DimensionMismatch { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A sentence given as text or as a list of words.
#[derive(FromPyObject)]
enum Words {
    Text(String),
    List(Vec<String>),
}

impl Words {
    fn sentence(self) -> PyResult<ndd_core::Sentence> {
        match self {
            Words::Text(t) => ndd_core::Sentence::parse(&t),
            Words::List(w) => ndd_core::Sentence::new(w),
        }
        .map_err(to_py)
    }
}

/// An edit of the 1-based span `start..=end`; `words` replaces it, or the
/// span is deleted when `words` is omitted.
#[pyclass(frozen, module = "ndd")]

struct Edit {
    inner: EditOperation,
}

#[pymethods]
impl Edit {
    #[new]
    #[pyo3(signature = (start, end, words=None))]
    fn new(start: usize, end: usize, words: Option<Vec<String>>) -> Self {
        let inner = match words {
            Some(w) => EditOperation::replacement(start, end, w),
            None => EditOperation::deletion(start, end),
        };
        Edit { inner }
    }

    #[getter]
    fn start(&self) -> usize {
        self.inner.start
    }

    #[getter]
    fn end(&self) -> usize {
        self.inner.end
    }

    #[getter]
    fn words(&self) -> Vec<String> {
        self.inner.replacement.clone()
    }

    fn apply(&self, sentence: Words) -> PyResult<Vec<String>> {
        Ok(sentence.sentence()?.apply(&self.inner).map_err(to_py)?.words().to_vec())
    }

    fn __repr__(&self) -> String {
        if self.inner.replacement.is_empty() {
            format!("Edit({}, {})", self.inner.start, self.inner.end)
        } else {
            format!("Edit({}, {}, {:?})", self.inner.start, self.inner.end, self.inner.replacement)
        }
    }
}

/// A masked language model: the built-in n-gram oracle or an exported
/// ONNX bundle.
#[pyclass(frozen, module = "ndd")]
struct Backend {
    inner: Box<dyn MlmBackend>,
    kind: &'static str,
}

fn trace_dict<'py>(py: Python<'py>, trace: &CompressionTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("words", trace.final_sentence.words().to_vec())?;
    d.set_item("text", trace.final_sentence.to_string())?;
    d.set_item("kept_positions", trace.kept_positions.clone())?;
    d.set_item("pruned_spans", trace.pruned_spans())?;
    d.set_item("iterations", trace.iterations.len())?;
    Ok(d)
}

#[pymethods]
impl Backend {
    /// Bidirectional trigram oracle trained on the embedded corpus, or on
    /// `corpus` (one sentence per item) when given.
    #[staticmethod]
    #[pyo3(signature = (corpus=None))]
    fn toy(corpus: Option<Vec<String>>) -> PyResult<Self> {
        let oracle = match corpus {
            Some(lines) => NgramOracle::from_corpus(lines.iter().map(String::as_str)).map_err(to_py)?,
            None => NgramOracle::embedded(),
        };
        Ok(Backend { inner: Box::new(oracle), kind: "toy" })
    }

    #[staticmethod]
    fn onnx(path: std::path::PathBuf) -> PyResult<Self> {
        let backend = ndd_core::backend::onnx::OnnxBackend::load(path).map_err(to_py)?;
        Ok(Backend { inner: Box::new(backend), kind: "onnx" })
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.vocabulary().len()
    }

    /// NDD of applying `edit` to `sentence`, with per-neighbor detail.
    #[pyo3(signature = (sentence, edit, mu=1.0, nu=1.0, balanced=false, positional=false))]
    #[allow(clippy::too_many_arguments)]
    fn score<'py>(
        &self,
        py: Python<'py>,
        sentence: Words,
        edit: &Edit,
        mu: f64,
        nu: f64,
        balanced: bool,
        positional: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let weights = WeightConfig { mu, nu, balanced, positional };
        let profile = ndd_core::score_edit(&*self.inner, &sentence.sentence()?, &edit.inner, &weights)
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("score", profile.score)?;
        d.set_item("positions", profile.neighbor_positions)?;
        d.set_item("divergences", profile.divergences)?;
        d.set_item("weights", profile.weights)?;
        Ok(d)
    }

    fn pseudo_perplexity(&self, sentence: Words) -> PyResult<f64> {
        pseudo_perplexity(&*self.inner, &sentence.sentence()?).map_err(to_py)
    }

    /// Cosine similarity of the mean-pooled sentence embeddings.
    fn cosine(&self, a: Words, b: Words) -> PyResult<f64> {
        let ea = sentence_embedding(&*self.inner, &a.sentence()?).map_err(to_py)?;
        let eb = sentence_embedding(&*self.inner, &b.sentence()?).map_err(to_py)?;
        cosine_similarity(&ea, &eb).map_err(to_py)
    }

    /// Deletion-only compression. `method` is "ndd" or "ppl"; `ppl_ceiling`
    /// is relative to the unedited pseudo-perplexity.
    #[pyo3(signature = (sentence, l_max=9, ndd_max=1.0, mu=0.9, nu=0.9, max_iterations=10, keep_higher=false, method="ndd", ppl_ceiling=1.25))]
    #[allow(clippy::too_many_arguments)]
    fn compress<'py>(
        &self,
        py: Python<'py>,
        sentence: Words,
        l_max: usize,
        ndd_max: f64,
        mu: f64,
        nu: f64,
        max_iterations: usize,
        keep_higher: bool,
        method: &str,
        ppl_ceiling: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let config = CompressionConfig {
            l_max,
            ndd_max,
            weights: WeightConfig::compression(mu, nu),
            max_iterations,
            overlap_keep: if keep_higher { OverlapKeep::Higher } else { OverlapKeep::Lower },
            ..CompressionConfig::default()
        };
        let s = sentence.sentence()?;
        let trace = match method {
            "ndd" => compress(&s, &*self.inner, &config),
            "ppl" => ppl_compress(&s, &*self.inner, &config, PplCeiling::Relative(ppl_ceiling)),
            other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
        }
        .map_err(to_py)?;
        trace_dict(py, &trace)
    }

    /// Per-word predicate scores. `mode` is "delete", "mask", "word" or
    /// "ensemble" (the product of the three per-mode softmaxes).
    #[pyo3(signature = (sentence, mode="ensemble", word="a", mu=1.0))]
    fn predicate_scores(&self, sentence: Words, mode: &str, word: &str, mu: f64) -> PyResult<Vec<f64>> {
        let s = sentence.sentence()?;
        let replace = EditionMode::replace_by_word(word).map_err(to_py)?;
        let modes = match mode {
            "delete" => vec![EditionMode::Delete],
            "mask" => vec![EditionMode::ReplaceByMask],
            "word" => vec![replace],
            "ensemble" => vec![EditionMode::Delete, EditionMode::ReplaceByMask, replace],
            other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
        };
        let rankings = modes
            .iter()
            .map(|m| word_edit_scores(&s, &*self.inner, m, mu))
            .collect::<ndd_core::Result<Vec<_>>>()
            .map_err(to_py)?;
        if mode == "ensemble" {
            Ok(ensemble_scores(&rankings).map_err(to_py)?.scores)
        } else {
            Ok(rankings.into_iter().next().expect("one mode").scores)
        }
    }

    fn __repr__(&self) -> String {
        format!("Backend({}, vocab_size={})", self.kind, self.inner.vocabulary().len())
    }
}

/// KL(after || before) in nats, after flooring both at 1e-12.
#[pyfunction]
fn kl_divergence(after: Vec<f64>, before: Vec<f64>) -> PyResult<f64> {
    let id = ndd_core::VocabId(0);
    let a = ndd_core::VocabDistribution::new(after, id).map_err(to_py)?;
    let b = ndd_core::VocabDistribution::new(before, id).map_err(to_py)?;
    ndd_core::kl_divergence(&a, &b).map_err(to_py)
}

/// Neighbor weights for an edit of `i..=j` in a sentence of `n` words.
#[pyfunction]
#[pyo3(signature = (n, i, j, mu=1.0, nu=1.0, balanced=false, positional=false))]
fn weights(n: usize, i: usize, j: usize, mu: f64, nu: f64, balanced: bool, positional: bool) -> PyResult<Vec<f64>> {
    WeightConfig { mu, nu, balanced, positional }.weights(n, i, j).map_err(to_py)
}

/// (precision, recall, f1) of kept 1-based positions.
#[pyfunction]
fn f1(system: BTreeSet<usize>, gold: BTreeSet<usize>) -> (f64, f64, f64) {
    let f = token_f1(&system, &gold);
    (f.precision, f.recall, f.f1)
}

/// Smoothed sentence BLEU up to 4-grams.
#[pyfunction]
fn bleu(candidate: Words, reference: Words) -> PyResult<f64> {
    let c = candidate.sentence()?;
    let r = reference.sentence()?;
    Ok(eval::bleu(c.words(), r.words(), 4).composite)
}

#[pyfunction]
fn average_precision(labels: Vec<bool>, scores: Vec<f64>) -> PyResult<Option<f64>> {
    if labels.len() != scores.len() {
        return Err(PyValueError::new_err("labels and scores differ in length"));
    }
    Ok(eval::average_precision(&labels, &scores))
}

#[pyfunction]
fn auc(labels: Vec<bool>, scores: Vec<f64>) -> PyResult<f64> {
    eval::pairwise_auc(&labels, &scores).map_err(to_py)
}

/// Depth of every word (root = 1) of each tree in a CoNLL-U file.
#[pyfunction]
fn conllu_depths(path: std::path::PathBuf) -> PyResult<Vec<Vec<usize>>> {
    let trees = eval::load_conllu(path).map_err(to_py)?;
    Ok(trees.iter().map(|t| (1..=t.len()).map(|k| t.depth(k)).collect()).collect())
}

#[pymodule]
fn ndd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Edit>()?;
    m.add_class::<Backend>()?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(weights, m)?)?;
    m.add_function(wrap_pyfunction!(f1, m)?)?;
    m.add_function(wrap_pyfunction!(bleu, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(conllu_depths, m)?)?;
    Ok(())
}
