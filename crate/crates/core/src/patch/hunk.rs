use std::collections::HashSet;
use std::sync::Arc;

use crate::diff::{Edit, EditScript};

/// Git's default number of context lines.
pub const DEFAULT_CONTEXT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineKind {
    Context,
    Delete,
    Insert,
}

impl LineKind {
    pub fn prefix(self) -> u8 {
        match self {
            LineKind::Context => b' ',
            LineKind::Delete => b'-',
            LineKind::Insert => b'+',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HunkLine {
    pub kind: LineKind,
    pub text: Arc<[u8]>,
    /// This is the last line of a side that has no trailing newline.
    pub no_newline: bool,
}

/// A block of changed lines with surrounding context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: usize,
    pub old_count: usize,
    pub new_start: usize,
    pub new_count: usize,
    pub lines: Vec<HunkLine>,
}

impl Hunk {
    /// Whether the header counts agree with the body.
    pub fn is_consistent(&self) -> bool {
        let count = |k: LineKind| self.lines.iter().filter(|l| l.kind == k).count();
        let (ctx, del, ins) = (count(LineKind::Context), count(LineKind::Delete), count(LineKind::Insert));
        self.old_count == ctx + del && self.new_count == ctx + ins
    }
}

/// Groups a script's changes into hunks. Changes separated by at most
/// `2 * context` unchanged lines share a hunk.
///
/// Suppressed blank-line changes are not hunk-worthy on their own but are
/// shown when they fall inside a hunk.
pub fn build_hunks(script: &EditScript, context: usize) -> Vec<Hunk> {
    let mut records = script.all_records();
    let suppressed_old: HashSet<usize> = script.suppressed.iter().filter_map(Edit::old_pos).collect();
    let suppressed_new: HashSet<usize> = script
        .suppressed
        .iter()
        .filter_map(|r| match r {
            Edit::Insert { new, .. } => Some(*new),
            _ => None,
        })
        .collect();

    // A line that ends one side without a newline but not the other side is
    // a change.
    if let Some(idx) = records.iter().rposition(|r| !r.is_change()) {
        if let Edit::Equal { old, new, line } = records[idx].clone() {
            let old_open = old == script.old_len && script.old_missing_newline;
            let new_open = new == script.new_len && script.new_missing_newline;
            if old_open != new_open {
                records[idx] = Edit::Delete { old, line: line.clone() };
                records.insert(idx + 1, Edit::Insert { new, line });
            }
        }
    }

    let changes: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| match r {
            Edit::Equal { .. } => false,
            Edit::Delete { old, .. } => !suppressed_old.contains(old),
            Edit::Insert { new, .. } => !suppressed_new.contains(new),
        })
        .map(|(i, _)| i)
        .collect();

    let mut spans: Vec<(usize, usize)> = Vec::new();
    for &c in &changes {
        match spans.last_mut() {
            Some((_, end)) if c - *end <= 2 * context + 1 => *end = c,
            _ => spans.push((c, c)),
        }
    }

    // Old/new positions consumed before each record.
    let mut before = Vec::with_capacity(records.len() + 1);
    let (mut o, mut n) = (0, 0);
    for r in &records {
        before.push((o, n));
        if r.old_pos().is_some() {
            o += 1;
        }
        if r.new_pos().is_some() {
            n += 1;
        }
    }

    spans
        .into_iter()
        .map(|(first, last)| {
            let start = first.saturating_sub(context);
            let end = (last + context + 1).min(records.len());
            let lines: Vec<HunkLine> = records[start..end]
                .iter()
                .map(|r| {
                    let (kind, no_newline) = match *r {
                        Edit::Equal { old, .. } => (
                            LineKind::Context,
                            old == script.old_len && script.old_missing_newline,
                        ),
                        Edit::Delete { old, .. } => (
                            LineKind::Delete,
                            old == script.old_len && script.old_missing_newline,
                        ),
                        Edit::Insert { new, .. } => (
                            LineKind::Insert,
                            new == script.new_len && script.new_missing_newline,
                        ),
                    };
                    HunkLine {
                        kind,
                        text: Arc::from(r.line().raw()),
                        no_newline,
                    }
                })
                .collect();
            let old_count = lines.iter().filter(|l| l.kind != LineKind::Insert).count();
            let new_count = lines.iter().filter(|l| l.kind != LineKind::Delete).count();
            let (ob, nb) = before[start];
            Hunk {
                old_start: if old_count == 0 { ob } else { ob + 1 },
                old_count,
                new_start: if new_count == 0 { nb } else { nb + 1 },
                new_count,
                lines,
            }
        })
        .collect()
}
