//! WordPiece: greedy longest-match-first subword splitting with `##`
//! continuation pieces and an unknown-token fallback.

use std::ops::Range;

use super::Vocabulary;
use crate::ndd::Sentence;
use crate::{Error, Result};

const CONTINUATION_PREFIX: &str = "##";
const MAX_CHARS_PER_WORD: usize = 100;

/// A sentence projected onto subword ids, with `[CLS]` and `[SEP]` around it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSentence {
    pub source: Sentence,
    pub token_ids: Vec<u32>,
    /// For each source word, the range of `token_ids` it occupies.
    pub word_spans: Vec<Range<usize>>,
}

impl TokenizedSentence {
    pub fn word_count(&self) -> usize {
        self.word_spans.len()
    }

    /// Token ids with the whole subword span of the 1-based `word_index`
    /// replaced by one mask token, and the index of that mask.
    pub fn masked_word(&self, word_index: usize, mask_id: u32) -> Result<(Vec<u32>, usize)> {
        let span = word_index
            .checked_sub(1)
            .and_then(|w| self.word_spans.get(w))
            .ok_or_else(|| {
                Error::InvalidEdit(format!(
                    "word {word_index} is not within 1..={}",
                    self.word_count()
                ))
            })?;
        let mut ids = Vec::with_capacity(self.token_ids.len());
        ids.extend_from_slice(&self.token_ids[..span.start]);
        ids.push(mask_id);
        ids.extend_from_slice(&self.token_ids[span.end..]);
        Ok((ids, span.start))
    }
}

/// Tokenizes `sentence`, failing when the result (boundary tokens included)
/// would be longer than `max_len`.
pub fn tokenize(sentence: &Sentence, vocab: &Vocabulary, max_len: usize) -> Result<TokenizedSentence> {
    let mut token_ids = vec![vocab.cls_id];
    let mut word_spans = Vec::with_capacity(sentence.len());
    for word in sentence.words() {
        let start = token_ids.len();
        tokenize_word(word, vocab, &mut token_ids);
        word_spans.push(start..token_ids.len());
    }
    token_ids.push(vocab.sep_id);
    if token_ids.len() > max_len {
        return Err(Error::SequenceTooLong {
            len: token_ids.len(),
            limit: max_len,
        });
    }
    Ok(TokenizedSentence {
        source: sentence.clone(),
        token_ids,
        word_spans,
    })
}

/// Appends the subword ids of one whitespace-free word. Always appends at
/// least one id.
pub fn tokenize_word(word: &str, vocab: &Vocabulary, out: &mut Vec<u32>) {
    if let Some(id) = vocab.special_id(word) {
        out.push(id);
        return;
    }
    let normalized;
    let word = if vocab.cased() {
        word
    } else {
        normalized = word.to_lowercase();
        &normalized
    };
    for piece in split_punctuation(word) {
        wordpiece(piece, vocab, out);
    }
}

fn wordpiece(piece: &str, vocab: &Vocabulary, out: &mut Vec<u32>) {
    let chars: Vec<(usize, char)> = piece.char_indices().collect();
    if chars.len() > MAX_CHARS_PER_WORD {
        out.push(vocab.unk_id);
        return;
    }
    let mut found = Vec::new();
    let mut start = 0;
    let mut candidate = String::with_capacity(piece.len() + CONTINUATION_PREFIX.len());
    while start < chars.len() {
        let mut end = chars.len();
        let mut matched = None;
        while end > start {
            let from = chars[start].0;
            let to = chars.get(end).map_or(piece.len(), |c| c.0);
            candidate.clear();
            if start > 0 {
                candidate.push_str(CONTINUATION_PREFIX);
            }
            candidate.push_str(&piece[from..to]);
            if let Some(id) = vocab.token_id(&candidate) {
                matched = Some(id);
                break;
            }
            end -= 1;
        }
        match matched {
            Some(id) => {
                found.push(id);
                start = end;
            }
            None => {
                out.push(vocab.unk_id);
                return;
            }
        }
    }
    out.extend(found);
}

// Every punctuation character becomes its own piece.
fn split_punctuation(word: &str) -> Vec<&str> {
    let mut pieces = Vec::new();
    let mut start = 0;
    for (i, c) in word.char_indices() {
        if is_punctuation(c) {
            if start < i {
                pieces.push(&word[start..i]);
            }
            pieces.push(&word[i..i + c.len_utf8()]);
            start = i + c.len_utf8();
        }
    }
    if start < word.len() {
        pieces.push(&word[start..]);
    }
    pieces
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c as u32, 0x2000..=0x206F | 0x3000..=0x303F | 0xFF01..=0xFF0F)
        || matches!(c, '¡' | '¿' | '«' | '»' | '·' | '§' | '¶')
}
