//! Line-oriented differencing.
//!
//! Content is split into [`Sequence`]s of [`LineToken`]s, and one of four
//! algorithms pairs up unchanged lines. The result is an [`EditScript`]: an
//! ordered list of equal, deleted and inserted lines that carries the line
//! content it refers to, so downstream consumers (hunk builders, churn
//! metrics, SZZ) never need the original sequences again.
//!
//! All positions are 1-based.

mod anchored;
mod intern;
mod lcs;
mod myers;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use anchored::SeparatorEvent;
pub use lcs::{lcs_length_oracle, ORACLE_CELL_LIMIT};

/// Occurrence cap for histogram separators; lines seen more often in the old
/// region are never chosen and the region falls back to Myers.
pub const DEFAULT_MAX_OCCURRENCE: usize = 64;

/// Line identity rules, mirroring `git diff -w --ignore-blank-lines`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalizationFlags {
    pub ignore_whitespace: bool,
    pub ignore_blank_lines: bool,
}

impl NormalizationFlags {
    /// The flags used throughout the mining and SZZ pipelines.
    pub const MINING: NormalizationFlags = NormalizationFlags {
        ignore_whitespace: true,
        ignore_blank_lines: true,
    };

    fn key_of(&self, raw: &Arc<[u8]>) -> Arc<[u8]> {
        if self.ignore_whitespace && raw.iter().any(u8::is_ascii_whitespace) {
            raw.iter()
                .copied()
                .filter(|b| !b.is_ascii_whitespace())
                .collect()
        } else {
            Arc::clone(raw)
        }
    }
}

/// One line of input. Equality is decided by `key` only.
#[derive(Clone, Eq)]
pub struct LineToken {
    raw: Arc<[u8]>,
    key: Arc<[u8]>,
}

impl LineToken {
    pub fn new(raw: &[u8], flags: NormalizationFlags) -> LineToken {
        let raw: Arc<[u8]> = Arc::from(raw);
        let key = flags.key_of(&raw);
        LineToken { raw, key }
    }

    /// The line as it appeared in the input, terminator excluded.
    pub fn raw(&self) -> &[u8] {
        &self.raw
    }

    /// The normalized identity used for matching.
    pub fn key(&self) -> &[u8] {
        &self.key
    }

    pub(crate) fn shared_key(&self) -> Arc<[u8]> {
        Arc::clone(&self.key)
    }

    pub fn is_blank(&self) -> bool {
        self.key.is_empty()
    }
}

impl PartialEq for LineToken {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl std::hash::Hash for LineToken {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}

impl fmt::Debug for LineToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", String::from_utf8_lossy(&self.raw))
    }
}

/// A tokenized file version.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sequence {
    tokens: Vec<LineToken>,
    missing_trailing_newline: bool,
    flags: NormalizationFlags,
}

impl Sequence {
    /// Builds a sequence from already-split lines. Handy for tests and bindings.
    pub fn from_lines<I, L>(lines: I, flags: NormalizationFlags) -> Sequence
    where
        I: IntoIterator<Item = L>,
        L: AsRef<[u8]>,
    {
        Sequence {
            tokens: lines
                .into_iter()
                .map(|l| LineToken::new(l.as_ref(), flags))
                .collect(),
            missing_trailing_newline: false,
            flags,
        }
    }

    pub fn tokens(&self) -> &[LineToken] {
        &self.tokens
    }

    /// Token at a 1-based position.
    pub fn get(&self, pos: usize) -> Option<&LineToken> {
        pos.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn missing_trailing_newline(&self) -> bool {
        self.missing_trailing_newline
    }

    pub fn flags(&self) -> NormalizationFlags {
        self.flags
    }

    /// Serializes back to bytes, using LF terminators.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (i, t) in self.tokens.iter().enumerate() {
            out.extend_from_slice(t.raw());
            if i + 1 < self.tokens.len() || !self.missing_trailing_newline {
                out.push(b'\n');
            }
        }
        out
    }
}

/// Splits content into lines. LF and CRLF terminators are stripped.
pub fn split_lines(content: &[u8], flags: NormalizationFlags) -> Sequence {
    let mut tokens = Vec::new();
    let mut rest = content;
    while !rest.is_empty() {
        let (line, tail) = match rest.iter().position(|&b| b == b'\n') {
            Some(nl) => (&rest[..nl], &rest[nl + 1..]),
            None => (rest, &rest[rest.len()..]),
        };
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        tokens.push(LineToken::new(line, flags));
        rest = tail;
    }
    Sequence {
        tokens,
        missing_trailing_newline: !content.is_empty() && !content.ends_with(b"\n"),
        flags,
    }
}

/// The four algorithms git offers through `--diff-algorithm`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmId {
    #[default]
    Myers,
    Minimal,
    Patience,
    Histogram,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 4] = [
        AlgorithmId::Myers,
        AlgorithmId::Minimal,
        AlgorithmId::Patience,
        AlgorithmId::Histogram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::Myers => "myers",
            AlgorithmId::Minimal => "minimal",
            AlgorithmId::Patience => "patience",
            AlgorithmId::Histogram => "histogram",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown diff algorithm `{0}` (expected myers, minimal, patience or histogram)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for AlgorithmId {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

/// One record of an edit script. `line` is the old-side token for `Equal`
/// and `Delete`, the new-side token for `Insert`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Edit {
    Equal {
        old: usize,
        new: usize,
        line: LineToken,
    },
    Delete {
        old: usize,
        line: LineToken,
    },
    Insert {
        new: usize,
        line: LineToken,
    },
}

impl Edit {
    pub fn line(&self) -> &LineToken {
        match self {
            Edit::Equal { line, .. } | Edit::Delete { line, .. } | Edit::Insert { line, .. } => {
                line
            }
        }
    }

    pub fn is_change(&self) -> bool {
        !matches!(self, Edit::Equal { .. })
    }

    pub fn old_pos(&self) -> Option<usize> {
        match *self {
            Edit::Equal { old, .. } | Edit::Delete { old, .. } => Some(old),
            Edit::Insert { .. } => None,
        }
    }

    pub fn new_pos(&self) -> Option<usize> {
        match *self {
            Edit::Equal { new, .. } | Edit::Insert { new, .. } => Some(new),
            Edit::Delete { .. } => None,
        }
    }
}

/// Ordered records mapping an old sequence onto a new one.
///
/// `records` holds the effective script. When the old sequence was tokenized
/// with `ignore_blank_lines`, change blocks made only of blank lines are moved
/// to `suppressed`; every position is covered by exactly one record across
/// both lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EditScript {
    pub old_len: usize,
    pub new_len: usize,
    pub old_missing_newline: bool,
    pub new_missing_newline: bool,
    pub records: Vec<Edit>,
    pub suppressed: Vec<Edit>,
}

impl EditScript {
    pub fn is_identity(&self) -> bool {
        self.records.iter().all(|r| !r.is_change())
    }

    pub fn inserts(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r, Edit::Insert { .. }))
            .count()
    }

    pub fn deletes(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r, Edit::Delete { .. }))
            .count()
    }

    /// Matched (old, new) position pairs.
    pub fn equal_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.records.iter().filter_map(|r| match *r {
            Edit::Equal { old, new, .. } => Some((old, new)),
            _ => None,
        })
    }

    /// Every record, suppressed ones re-inserted at their place, in script order.
    pub fn all_records(&self) -> Vec<Edit> {
        if self.suppressed.is_empty() {
            return self.records.clone();
        }
        // Blocks are wholly kept or wholly suppressed, so at any point at most
        // one list holds the record that consumes the next position.
        let ready = |r: &Edit, i: usize, j: usize| match *r {
            Edit::Equal { old, new, .. } => old == i + 1 && new == j + 1,
            Edit::Delete { old, .. } => old == i + 1,
            Edit::Insert { new, .. } => new == j + 1,
        };
        let mut out = Vec::with_capacity(self.records.len() + self.suppressed.len());
        let (mut a, mut b) = (self.records.iter().peekable(), self.suppressed.iter().peekable());
        let (mut i, mut j) = (0, 0);
        loop {
            let r = match (a.peek(), b.peek()) {
                (None, None) => break,
                (Some(x), _) if ready(x, i, j) => a.next(),
                (_, Some(y)) if ready(y, i, j) => b.next(),
                // Malformed script: keep the remaining order as is.
                (Some(_), _) => a.next(),
                (None, Some(_)) => b.next(),
            }
            .expect("peeked");
            if let Some(o) = r.old_pos() {
                i = i.max(o);
            }
            if let Some(n) = r.new_pos() {
                j = j.max(n);
            }
            out.push(r.clone());
        }
        out
    }
}

/// Fails unless both scripts were computed over the same old/new pair:
/// same lengths and the same line keys wherever either script names a line.
pub fn ensure_same_inputs(a: &EditScript, b: &EditScript) -> Result<()> {
    if a.old_len != b.old_len || a.new_len != b.new_len {
        return Err(Error::Structural(format!(
            "scripts cover different sequences ({}->{} vs {}->{} lines)",
            a.old_len, a.new_len, b.old_len, b.new_len
        )));
    }
    type Keys<'s> = (Vec<Option<&'s [u8]>>, Vec<Option<&'s [u8]>>);
    fn put<'s>(side: &mut [Option<&'s [u8]>], pos: usize, key: &'s [u8]) -> Result<()> {
        let slot = pos
            .checked_sub(1)
            .and_then(|i| side.get_mut(i))
            .ok_or_else(|| Error::Structural(format!("position {pos} out of range")))?;
        *slot = Some(key);
        Ok(())
    }
    fn keys(s: &EditScript) -> Result<Keys<'_>> {
        let mut old = vec![None; s.old_len];
        let mut new = vec![None; s.new_len];
        for r in s.records.iter().chain(&s.suppressed) {
            let key = r.line().key();
            if let Some(o) = r.old_pos() {
                put(&mut old, o, key)?;
            }
            if let Some(n) = r.new_pos() {
                put(&mut new, n, key)?;
            }
        }
        Ok((old, new))
    }
    let (ka, kb) = (keys(a)?, keys(b)?);
    let clash = |x: &[Option<&[u8]>], y: &[Option<&[u8]>]| {
        x.iter().zip(y).any(|(p, q)| matches!((p, q), (Some(p), Some(q)) if p != q))
    };
    if clash(&ka.0, &kb.0) || clash(&ka.1, &kb.1) {
        return Err(Error::Structural("scripts cover different line content".into()));
    }
    Ok(())
}

/// Runs the named algorithm.
pub fn diff(old: &Sequence, new: &Sequence, alg: AlgorithmId) -> EditScript {
    match alg {
        AlgorithmId::Myers => myers_diff(old, new),
        AlgorithmId::Minimal => minimal_diff(old, new),
        AlgorithmId::Patience => patience_diff(old, new),
        AlgorithmId::Histogram => histogram_diff(old, new, DEFAULT_MAX_OCCURRENCE),
    }
}

/// Shortest edit script by Myers' greedy forward search.
pub fn myers_diff(old: &Sequence, new: &Sequence) -> EditScript {
    let (a, b) = intern::intern(old, new);
    let matches = myers::matches(&a, &b);
    build_script(old, new, &matches)
}

/// Same as [`myers_diff`]: the search here is always exact.
pub fn minimal_diff(old: &Sequence, new: &Sequence) -> EditScript {
    myers_diff(old, new)
}

/// Patience diff: anchors on lines unique to both sides of each region.
pub fn patience_diff(old: &Sequence, new: &Sequence) -> EditScript {
    let (a, b) = intern::intern(old, new);
    let matches = anchored::matches(&a, &b, anchored::Strategy::Patience, &mut |_| {});
    build_script(old, new, &matches)
}

/// Histogram diff: anchors on the lowest-occurrence common line of each region.
pub fn histogram_diff(old: &Sequence, new: &Sequence, max_occurrence: usize) -> EditScript {
    histogram_diff_observed(old, new, max_occurrence, &mut |_| {})
}

/// [`histogram_diff`] reporting every separator it picks to `observer`.
pub fn histogram_diff_observed(
    old: &Sequence,
    new: &Sequence,
    max_occurrence: usize,
    observer: &mut dyn FnMut(&SeparatorEvent),
) -> EditScript {
    let (a, b) = intern::intern(old, new);
    let strategy = anchored::Strategy::Histogram {
        max_occurrence: max_occurrence.max(1),
    };
    let matches = anchored::matches(&a, &b, strategy, observer);
    build_script(old, new, &matches)
}

/// Builds the script for a set of 0-based matched pairs. Within each gap,
/// deletions precede insertions.
fn build_script(old: &Sequence, new: &Sequence, matches: &[(usize, usize)]) -> EditScript {
    let mut records = Vec::with_capacity(old.len().max(new.len()) + 1);
    let (mut i, mut j) = (0, 0);
    let gap = |records: &mut Vec<Edit>, i: &mut usize, j: &mut usize, to_i: usize, to_j: usize| {
        for p in *i..to_i {
            records.push(Edit::Delete {
                old: p + 1,
                line: old.tokens[p].clone(),
            });
        }
        for p in *j..to_j {
            records.push(Edit::Insert {
                new: p + 1,
                line: new.tokens[p].clone(),
            });
        }
        *i = to_i;
        *j = to_j;
    };
    for &(mi, mj) in matches {
        debug_assert!(mi >= i && mj >= j && old.tokens[mi] == new.tokens[mj]);
        gap(&mut records, &mut i, &mut j, mi, mj);
        records.push(Edit::Equal {
            old: mi + 1,
            new: mj + 1,
            line: old.tokens[mi].clone(),
        });
        i += 1;
        j += 1;
    }
    gap(&mut records, &mut i, &mut j, old.len(), new.len());

    let mut script = EditScript {
        old_len: old.len(),
        new_len: new.len(),
        old_missing_newline: old.missing_trailing_newline,
        new_missing_newline: new.missing_trailing_newline,
        records,
        suppressed: Vec::new(),
    };
    if old.flags.ignore_blank_lines || new.flags.ignore_blank_lines {
        suppress_blank_changes(&mut script);
    }
    script
}

fn suppress_blank_changes(script: &mut EditScript) {
    let records = std::mem::take(&mut script.records);
    let mut kept = Vec::with_capacity(records.len());
    let mut block: Vec<Edit> = Vec::new();
    let mut flush = |block: &mut Vec<Edit>, kept: &mut Vec<Edit>| {
        if !block.is_empty() && block.iter().all(|r| r.line().is_blank()) {
            script.suppressed.append(block);
        } else {
            kept.append(block);
        }
    };
    for r in records {
        if r.is_change() {
            block.push(r);
        } else {
            flush(&mut block, &mut kept);
            kept.push(r);
        }
    }
    flush(&mut block, &mut kept);
    script.records = kept;
}

/// Rebuilds the new sequence from `old` and a script produced against it.
pub fn apply_script(old: &Sequence, script: &EditScript) -> Result<Sequence> {
    if script.old_len != old.len() {
        return Err(Error::Structural(format!(
            "script expects {} old lines, sequence has {}",
            script.old_len,
            old.len()
        )));
    }
    let mut old_seen = vec![false; old.len()];
    let mut new_tokens: Vec<Option<LineToken>> = vec![None; script.new_len];
    let mut last_pair = (0, 0);

    let mut claim_old = |pos: usize, key: &LineToken| -> Result<()> {
        let slot = pos
            .checked_sub(1)
            .and_then(|i| old_seen.get_mut(i))
            .ok_or_else(|| Error::Structural(format!("old position {pos} out of range")))?;
        if std::mem::replace(slot, true) {
            return Err(Error::Structural(format!("old position {pos} used twice")));
        }
        if old.tokens[pos - 1] != *key {
            return Err(Error::Structural(format!(
                "record at old position {pos} does not match the old line"
            )));
        }
        Ok(())
    };
    let mut place_new = |pos: usize, token: LineToken| -> Result<()> {
        let slot = pos
            .checked_sub(1)
            .and_then(|i| new_tokens.get_mut(i))
            .ok_or_else(|| Error::Structural(format!("new position {pos} out of range")))?;
        if slot.replace(token).is_some() {
            return Err(Error::Structural(format!("new position {pos} used twice")));
        }
        Ok(())
    };

    for r in script.records.iter().chain(&script.suppressed) {
        match r {
            Edit::Equal { old: o, new: n, line } => {
                if (*o, *n) <= last_pair || *o <= last_pair.0 || *n <= last_pair.1 {
                    return Err(Error::Structural(format!(
                        "equal pair ({o},{n}) out of order"
                    )));
                }
                last_pair = (*o, *n);
                claim_old(*o, line)?;
                place_new(*n, old.tokens[*o - 1].clone())?;
            }
            Edit::Delete { old: o, line } => claim_old(*o, line)?,
            Edit::Insert { new: n, line } => place_new(*n, line.clone())?,
        }
    }
    if let Some(p) = old_seen.iter().position(|s| !s) {
        return Err(Error::Structural(format!("old position {} not covered", p + 1)));
    }
    let tokens = new_tokens
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| Error::Structural(format!("new position {} not covered", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sequence {
        tokens,
        missing_trailing_newline: script.new_missing_newline,
        flags: old.flags,
    })
}
