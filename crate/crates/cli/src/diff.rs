use ndd::{EditOperation, Sentence};

use crate::error::{CliError, CliResult};

/// Parses `start:end` (a deletion) or `start:end:words` (a replacement by
/// the space-separated words).
pub fn parse_edit(spec: &str) -> CliResult<EditOperation> {
    let mut parts = spec.splitn(3, ':');
    let mut index = |name: &str| -> CliResult<usize> {
        parts
            .next()
            .and_then(|p| p.trim().parse().ok())
            .ok_or_else(|| CliError::config(format!("--edit {spec:?}: bad {name} position")))
    };
    let start = index("start")?;
    let end = index("end")?;
    match parts.next() {
        None => Ok(EditOperation::deletion(start, end)),
        Some(words) => {
            let words: Vec<&str> = words.split_whitespace().collect();
            if words.is_empty() {
                Ok(EditOperation::deletion(start, end))
            } else {
                Ok(EditOperation::replacement(start, end, words))
            }
        }
    }
}

/// The single edit turning `before` into `after`, found by trimming the
/// common prefix and suffix. `None` means the sentences are identical.
///
/// Fails when the diff is an insertion or when trimming the suffix first
/// would locate a different edit.
pub fn infer_edit(before: &Sentence, after: &Sentence) -> CliResult<Option<EditOperation>> {
    let (b, a) = (before.words(), after.words());
    if b == a {
        return Ok(None);
    }
    let prefix_first = trim(b, a, true);
    let suffix_first = trim(b, a, false);
    if prefix_first != suffix_first {
        return Err(CliError::config(format!(
            "the diff is ambiguous (words {}..={} or {}..={}); pass --edit",
            prefix_first.0 + 1,
            b.len() - prefix_first.1,
            suffix_first.0 + 1,
            b.len() - suffix_first.1
        )));
    }
    let (p, s) = prefix_first;
    let removed = b.len() - p - s;
    let inserted = &a[p..a.len() - s];
    if removed == 0 {
        return Err(CliError::config(
            "insertions are not supported; the edit must replace or delete words of --before",
        ));
    }
    let (start, end) = (p + 1, p + removed);
    Ok(Some(if inserted.is_empty() {
        EditOperation::deletion(start, end)
    } else {
        EditOperation::replacement(start, end, inserted.iter().cloned())
    }))
}

// Lengths of the common prefix and suffix, trimming one side first.
fn trim(b: &[String], a: &[String], prefix_first: bool) -> (usize, usize) {
    let limit = b.len().min(a.len());
    let prefix = |cap: usize| (0..cap).take_while(|&k| b[k] == a[k]).count();
    let suffix = |cap: usize| {
        (0..cap)
            .take_while(|&k| b[b.len() - 1 - k] == a[a.len() - 1 - k])
            .count()
    };
    if prefix_first {
        let p = prefix(limit);
        (p, suffix(limit - p))
    } else {
        let s = suffix(limit);
        (prefix(limit - s), s)
    }
}
