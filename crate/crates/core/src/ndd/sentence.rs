use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A whitespace-tokenized sentence. Word positions are 1-based throughout the
/// crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    words: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    language: Option<String>,
}

impl Sentence {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        if words.is_empty() {
            return Err(Error::InvalidSentence("sentence has no words".into()));
        }
        for (k, w) in words.iter().enumerate() {
            if w.is_empty() {
                return Err(Error::InvalidSentence(format!("word {} is empty", k + 1)));
            }
            if w.chars().any(char::is_whitespace) {
                return Err(Error::InvalidSentence(format!(
                    "word {} ({w:?}) contains whitespace",
                    k + 1
                )));
            }
        }
        Ok(Sentence {
            words,
            language: None,
        })
    }

    /// Splits `text` on Unicode whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(text.split_whitespace())
    }

    pub fn with_language(mut self, tag: impl Into<String>) -> Self {
        self.language = Some(tag.into());
        self
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The word at 1-based `position`.
    pub fn word(&self, position: usize) -> Option<&str> {
        position
            .checked_sub(1)
            .and_then(|p| self.words.get(p))
            .map(String::as_str)
    }

    /// Applies `edit`, producing the edited sentence.
    pub fn apply(&self, edit: &EditOperation) -> Result<Sentence> {
        edit.validate(self)?;
        let mut words = Vec::with_capacity(self.len() + edit.replacement.len());
        words.extend_from_slice(&self.words[..edit.start - 1]);
        words.extend(edit.replacement.iter().cloned());
        words.extend_from_slice(&self.words[edit.end..]);
        if words.is_empty() {
            return Err(Error::InvalidEdit(
                "edit would leave an empty sentence".into(),
            ));
        }
        Ok(Sentence {
            words,
            language: self.language.clone(),
        })
    }

    /// Keeps the words at the given 1-based positions, in sentence order.
    pub fn retain_positions(&self, keep: &[usize]) -> Result<Sentence> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let words = keep
            .iter()
            .map(|&k| {
                self.word(k)
                    .map(str::to_owned)
                    .ok_or_else(|| Error::InvalidEdit(format!("position {k} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Sentence::new(words).map(|s| Sentence {
            language: self.language.clone(),
            ..s
        })
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.words.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditKind {
    Replacement,
    Deletion,
}

/// Replaces the inclusive word span `start..=end` with `replacement`.
/// A deletion is a replacement by nothing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditOperation {
    pub kind: EditKind,
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
}

impl EditOperation {
    pub fn deletion(start: usize, end: usize) -> Self {
        EditOperation {
            kind: EditKind::Deletion,
            start,
            end,
            replacement: Vec::new(),
        }
    }

    pub fn replacement<I, S>(start: usize, end: usize, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        EditOperation {
            kind: EditKind::Replacement,
            start,
            end,
            replacement: words.into_iter().map(Into::into).collect(),
        }
    }

    pub fn span_len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn validate(&self, source: &Sentence) -> Result<()> {
        let n = source.len();
        if self.start < 1 || self.start > self.end || self.end > n {
            return Err(Error::InvalidEdit(format!(
                "span {}..={} is not within 1..={n}",
                self.start, self.end
            )));
        }
        match self.kind {
            EditKind::Deletion if !self.replacement.is_empty() => Err(Error::InvalidEdit(
                "a deletion cannot carry replacement words".into(),
            )),
            EditKind::Replacement if self.replacement.is_empty() => Err(Error::InvalidEdit(
                "a replacement needs at least one word".into(),
            )),
            _ => {
                if let Some(w) = self
                    .replacement
                    .iter()
                    .find(|w| w.is_empty() || w.chars().any(char::is_whitespace))
                {
                    return Err(Error::InvalidEdit(format!(
                        "replacement word {w:?} is empty or contains whitespace"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Source positions of the unedited words, in order.
    pub fn neighbor_positions(&self, n: usize) -> Vec<usize> {
        super::neighbor_positions(n, self.start, self.end)
    }

    /// Where the unedited source word at `source_position` sits in the edited
    /// sentence. `None` for positions inside the edited span.
    pub fn edited_position(&self, source_position: usize) -> Option<usize> {
        if source_position < self.start {
            Some(source_position)
        } else if source_position > self.end {
            Some(source_position - self.span_len() + self.replacement.len())
        } else {
            None
        }
    }
}
