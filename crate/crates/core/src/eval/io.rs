//! Dataset readers and writers.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DependencyTree;
use crate::ndd::Sentence;
use crate::{Error, Result};

/// A source sentence with the 1-based positions its gold compression keeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionPair {
    pub source: Sentence,
    pub gold_kept: BTreeSet<usize>,
}

impl CompressionPair {
    pub fn new(source: Sentence, gold_kept: BTreeSet<usize>) -> Result<Self> {
        if let Some(&k) = gold_kept.iter().find(|&&k| k < 1 || k > source.len()) {
            return Err(Error::InvalidEdit(format!(
                "kept position {k} outside 1..={}",
                source.len()
            )));
        }
        Ok(CompressionPair { source, gold_kept })
    }

    /// The gold compression as words.
    pub fn compression(&self) -> Vec<String> {
        self.gold_kept
            .iter()
            .map(|&k| self.source.words()[k - 1].clone())
            .collect()
    }
}

/// Loaded compression pairs plus the 1-based line numbers of pairs whose
/// compression is not a subsequence of the sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionCorpus {
    pub pairs: Vec<CompressionPair>,
    pub skipped_lines: Vec<usize>,
}

/// Gold predicate flags for one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlSentence {
    pub words: Vec<String>,
    pub is_predicate: Vec<bool>,
}

impl SrlSentence {
    pub fn new(words: Vec<String>, is_predicate: Vec<bool>) -> Result<Self> {
        if words.len() != is_predicate.len() {
            return Err(Error::LengthMismatch(format!(
                "{} words, {} predicate flags",
                words.len(),
                is_predicate.len()
            )));
        }
        Ok(SrlSentence {
            words,
            is_predicate,
        })
    }

    pub fn sentence(&self) -> Result<Sentence> {
        Sentence::new(self.words.iter().cloned())
    }

    pub fn predicate_positions(&self) -> Vec<usize> {
        (1..).zip(&self.is_predicate).filter(|(_, &p)| p).map(|(k, _)| k).collect()
    }
}

/// Greedy left-to-right match of `compression` into `source`; returns
/// 1-based positions, or `None` when some word cannot be placed.
pub fn align_subsequence(source: &[String], compression: &[String]) -> Option<BTreeSet<usize>> {
    let mut kept = BTreeSet::new();
    let mut next = 0;
    for word in compression {
        let offset = source[next..].iter().position(|w| w == word)?;
        next += offset + 1;
        kept.insert(next);
    }
    Some(kept)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    sentence: String,
    compression: String,
}

pub fn load_compression_jsonl(path: impl AsRef<Path>) -> Result<CompressionCorpus> {
    let path = path.as_ref();
    parse_compression_jsonl(&read(path)?, path)
}

/// `origin` only labels errors.
pub fn parse_compression_jsonl(text: &str, origin: impl AsRef<Path>) -> Result<CompressionCorpus> {
    let origin = origin.as_ref();
    let mut corpus = CompressionCorpus::default();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPair = serde_json::from_str(line)
            .map_err(|e| parse_error(origin, line_no, e.column(), e.to_string()))?;
        let source = Sentence::parse(&raw.sentence)
            .map_err(|e| parse_error(origin, line_no, 1, e.to_string()))?;
        let compression: Vec<String> =
            raw.compression.split_whitespace().map(str::to_owned).collect();
        match align_subsequence(source.words(), &compression) {
            Some(kept) => corpus.pairs.push(CompressionPair {
                source,
                gold_kept: kept,
            }),
            None => corpus.skipped_lines.push(line_no),
        }
    }
    Ok(corpus)
}

pub fn write_compression_jsonl<W: Write>(mut out: W, pairs: &[CompressionPair]) -> io::Result<()> {
    for pair in pairs {
        let line = serde_json::json!({
            "sentence": pair.source.to_string(),
            "compression": pair.compression().join(" "),
        });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Tab-separated rows of one sentence, with their 1-based line numbers.
struct Block<'a> {
    rows: Vec<(usize, &'a str)>,
}

fn blocks(text: &str) -> Vec<Block<'_>> {
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !rows.is_empty() {
                out.push(Block {
                    rows: std::mem::take(&mut rows),
                });
            }
        } else if !line.starts_with('#') {
            rows.push((index + 1, line));
        }
    }
    if !rows.is_empty() {
        out.push(Block { rows });
    }
    out
}

/// Fields with their 1-based starting columns.
fn fields(line: &str) -> Vec<(usize, &str)> {
    let mut column = 1;
    line.split('\t')
        .map(|f| {
            let start = column;
            column += f.chars().count() + 1;
            (start, f)
        })
        .collect()
}

pub fn load_conllu(path: impl AsRef<Path>) -> Result<Vec<DependencyTree>> {
    let path = path.as_ref();
    parse_conllu(&read(path)?, path)
}

pub fn parse_conllu(text: &str, origin: impl AsRef<Path>) -> Result<Vec<DependencyTree>> {
    let origin = origin.as_ref();
    let mut trees = Vec::new();
    for block in blocks(text) {
        let mut words = Vec::new();
        let mut heads = Vec::new();
        let mut labels = Vec::new();
        for &(line_no, line) in &block.rows {
            let f = fields(line);
            if f.len() != 10 {
                return Err(parse_error(
                    origin,
                    line_no,
                    1,
                    format!("expected 10 tab-separated columns, found {}", f.len()),
                ));
            }
            let (id_col, id) = f[0];
            // multiword tokens and empty nodes carry no tree structure
            if id.contains('-') || id.contains('.') {
                continue;
            }
            let expected = words.len() + 1;
            if id.parse::<usize>().ok() != Some(expected) {
                return Err(parse_error(
                    origin,
                    line_no,
                    id_col,
                    format!("expected word id {expected}, found {id:?}"),
                ));
            }
            let (head_col, head) = f[6];
            let head: usize = head.parse().map_err(|_| {
                parse_error(origin, line_no, head_col, format!("bad head {head:?}"))
            })?;
            words.push(f[1].1.to_owned());
            heads.push(head);
            labels.push(f[7].1.to_owned());
        }
        let n = words.len();
        let first_line = block.rows[0].0;
        for (&(line_no, line), &h) in block.rows.iter().filter(|(_, l)| is_word_row(l)).zip(&heads) {
            if h > n {
                return Err(parse_error(
                    origin,
                    line_no,
                    fields(line)[6].0,
                    format!("head {h} outside 0..={n}"),
                ));
            }
        }
        let tree = DependencyTree::new(words, heads, labels)
            .map_err(|e| parse_error(origin, first_line, 1, e.to_string()))?;
        trees.push(tree);
    }
    Ok(trees)
}

fn is_word_row(line: &str) -> bool {
    let id = line.split('\t').next().unwrap_or("");
    !(id.contains('-') || id.contains('.'))
}

/// Columns other than ID, FORM, HEAD and DEPREL are written as `_`.
pub fn write_conllu<W: Write>(mut out: W, trees: &[DependencyTree]) -> io::Result<()> {
    for tree in trees {
        for k in 0..tree.len() {
            writeln!(
                out,
                "{}\t{}\t_\t_\t_\t_\t{}\t{}\t_\t_",
                k + 1,
                tree.words[k],
                tree.heads[k],
                tree.labels[k]
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

const FILLPRED: usize = 12;

pub fn load_conll2009(path: impl AsRef<Path>) -> Result<Vec<SrlSentence>> {
    let path = path.as_ref();
    parse_conll2009(&read(path)?, path)
}

pub fn parse_conll2009(text: &str, origin: impl AsRef<Path>) -> Result<Vec<SrlSentence>> {
    let origin = origin.as_ref();
    let mut sentences = Vec::new();
    for block in blocks(text) {
        let mut words = Vec::new();
        let mut flags = Vec::new();
        for &(line_no, line) in &block.rows {
            let f = fields(line);
            if f.len() <= FILLPRED + 1 {
                return Err(parse_error(
                    origin,
                    line_no,
                    1,
                    format!("expected at least 14 tab-separated columns, found {}", f.len()),
                ));
            }
            let expected = words.len() + 1;
            if f[0].1.parse::<usize>().ok() != Some(expected) {
                return Err(parse_error(
                    origin,
                    line_no,
                    f[0].0,
                    format!("expected word id {expected}, found {:?}", f[0].1),
                ));
            }
            let (fill_col, fill) = f[FILLPRED];
            let flag = match fill {
                "Y" => true,
                "_" => false,
                other => {
                    return Err(parse_error(
                        origin,
                        line_no,
                        fill_col,
                        format!("FILLPRED must be \"Y\" or \"_\", found {other:?}"),
                    ))
                }
            };
            words.push(f[1].1.to_owned());
            flags.push(flag);
        }
        sentences.push(SrlSentence::new(words, flags)?);
    }
    Ok(sentences)
}

/// Fourteen columns; PRED repeats FORM on predicate rows so the file stays
/// readable by other tools.
pub fn write_conll2009<W: Write>(mut out: W, sentences: &[SrlSentence]) -> io::Result<()> {
    for s in sentences {
        for (k, (word, &p)) in s.words.iter().zip(&s.is_predicate).enumerate() {
            let (fill, pred) = if p { ("Y", word.as_str()) } else { ("_", "_") };
            writeln!(
                out,
                "{}\t{word}\t_\t_\t_\t_\t_\t_\t0\t0\t_\t_\t{fill}\t{pred}",
                k + 1
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

