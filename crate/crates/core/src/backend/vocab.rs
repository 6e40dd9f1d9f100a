use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ndd::VocabId;
use crate::{Error, Result};

/// Surface strings of the special tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokens {
    pub pad: String,
    pub unk: String,
    pub cls: String,
    pub sep: String,
    pub mask: String,
}

impl Default for SpecialTokens {
    fn default() -> Self {
        SpecialTokens {
            pad: "[PAD]".into(),
            unk: "[UNK]".into(),
            cls: "[CLS]".into(),
            sep: "[SEP]".into(),
            mask: "[MASK]".into(),
        }
    }
}

/// A token dictionary; a token's id is its index in `entries`.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, u32>,
    pub pad_id: u32,
    pub unk_id: u32,
    pub cls_id: u32,
    pub sep_id: u32,
    pub mask_id: u32,
    cased: bool,
    id: VocabId,
}

impl Vocabulary {
    pub fn new(entries: Vec<String>, specials: &SpecialTokens, cased: bool) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.clone(), i as u32).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary entry {e:?}")));
            }
        }
        let lookup = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| Error::Config(format!("special token {s:?} missing from vocabulary")))
        };
        let pad_id = lookup(&specials.pad)?;
        let unk_id = lookup(&specials.unk)?;
        let cls_id = lookup(&specials.cls)?;
        let sep_id = lookup(&specials.sep)?;
        let mask_id = lookup(&specials.mask)?;
        let id = fingerprint(&entries, cased);
        Ok(Vocabulary {
            entries,
            index,
            pad_id,
            unk_id,
            cls_id,
            sep_id,
            mask_id,
            cased,
            id,
        })
    }

    /// Reads a `vocab.txt` file: one token per line, id = 0-based line number.
    pub fn from_file(path: &Path, specials: &SpecialTokens, cased: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries = text.lines().map(|l| l.trim_end_matches('\r').to_owned()).collect();
        Self::new(entries, specials, cased)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self) -> VocabId {
        self.id
    }

    pub fn cased(&self) -> bool {
        self.cased
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(String::as_str)
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    /// Sequence-structure tokens: padding and the boundary markers.
    pub fn is_special(&self, id: u32) -> bool {
        id == self.pad_id || id == self.cls_id || id == self.sep_id
    }

    /// Id of a special token given by its surface string, if `word` is one.
    pub(crate) fn special_id(&self, word: &str) -> Option<u32> {
        [self.pad_id, self.unk_id, self.cls_id, self.sep_id, self.mask_id]
            .into_iter()
            .find(|&id| self.entries[id as usize] == word)
    }
}

// FNV-1a over the entries and the casing flag.
fn fingerprint(entries: &[String], cased: bool) -> VocabId {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |b: u8| {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    };
    for e in entries {
        e.bytes().for_each(&mut feed);
        feed(0xff);
    }
    feed(u8::from(cased));
    VocabId(h)
}
