use std::sync::Arc;

use crate::error::{Error, Result};

use super::hunk::{Hunk, HunkLine, LineKind};

const NO_NEWLINE: &[u8] = b"\\ No newline at end of file";

/// `@@ -a,b +c,d @@`, with `,1` counts omitted as git does.
pub fn hunk_header(h: &Hunk) -> String {
    fn range(start: usize, count: usize) -> String {
        if count == 1 {
            start.to_string()
        } else {
            format!("{start},{count}")
        }
    }
    format!(
        "@@ -{} +{} @@",
        range(h.old_start, h.old_count),
        range(h.new_start, h.new_count)
    )
}

/// Renders hunks as a unified diff.
pub fn render_unified(hunks: &[Hunk], old_path: &str, new_path: &str) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("--- {old_path}\n+++ {new_path}\n").as_bytes());
    for h in hunks {
        out.extend_from_slice(hunk_header(h).as_bytes());
        out.push(b'\n');
        for line in &h.lines {
            out.push(line.kind.prefix());
            out.extend_from_slice(&line.text);
            out.push(b'\n');
            if line.no_newline {
                out.extend_from_slice(NO_NEWLINE);
                out.push(b'\n');
            }
        }
    }
    out
}

/// A parsed single-file unified diff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnifiedPatch {
    pub old_path: String,
    pub new_path: String,
    pub hunks: Vec<Hunk>,
}

fn parse_range(s: &str) -> Option<(usize, usize)> {
    match s.split_once(',') {
        Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
        None => Some((s.parse().ok()?, 1)),
    }
}

fn parse_header(line: &str) -> Option<(usize, usize, usize, usize)> {
    let rest = line.strip_prefix("@@ -")?;
    let (ranges, _) = rest.split_once(" @@")?;
    let (old, new) = ranges.split_once(" +")?;
    let (a, b) = parse_range(old)?;
    let (c, d) = parse_range(new)?;
    Some((a, b, c, d))
}

/// Parses the output of [`render_unified`].
pub fn parse_unified(text: &[u8]) -> Result<UnifiedPatch> {
    let malformed = |what: String| Error::Structural(format!("unified diff: {what}"));
    let mut lines = text.split(|&b| b == b'\n').peekable();
    let mut path = |prefix: &str| -> Result<String> {
        let line = lines.next().unwrap_or_default();
        let line = std::str::from_utf8(line).map_err(|_| malformed("non-UTF-8 header".into()))?;
        line.strip_prefix(prefix)
            .map(str::to_string)
            .ok_or_else(|| malformed(format!("expected `{prefix}` header, found `{line}`")))
    };
    let old_path = path("--- ")?;
    let new_path = path("+++ ")?;

    let mut hunks: Vec<Hunk> = Vec::new();
    while let Some(line) = lines.next() {
        if line.is_empty() && lines.peek().is_none() {
            break;
        }
        let header = std::str::from_utf8(line)
            .ok()
            .and_then(parse_header)
            .ok_or_else(|| malformed(format!("bad hunk header `{}`", String::from_utf8_lossy(line))))?;
        let (old_start, old_count, new_start, new_count) = header;
        let mut body: Vec<HunkLine> = Vec::new();
        let (mut seen_old, mut seen_new) = (0, 0);
        while seen_old < old_count || seen_new < new_count {
            let line = lines
                .next()
                .ok_or_else(|| malformed("hunk body ends early".into()))?;
            let kind = match line.first() {
                Some(b' ') => LineKind::Context,
                Some(b'-') => LineKind::Delete,
                Some(b'+') => LineKind::Insert,
                _ => {
                    return Err(malformed(format!(
                        "bad body line `{}`",
                        String::from_utf8_lossy(line)
                    )))
                }
            };
            if kind != LineKind::Insert {
                seen_old += 1;
            }
            if kind != LineKind::Delete {
                seen_new += 1;
            }
            body.push(HunkLine {
                kind,
                text: Arc::from(&line[1..]),
                no_newline: false,
            });
            if lines.peek() == Some(&NO_NEWLINE) {
                lines.next();
                body.last_mut().expect("just pushed").no_newline = true;
            }
        }
        if seen_old != old_count || seen_new != new_count {
            return Err(malformed("hunk body does not match its header".into()));
        }
        hunks.push(Hunk {
            old_start,
            old_count,
            new_start,
            new_count,
            lines: body,
        });
    }
    Ok(UnifiedPatch {
        old_path,
        new_path,
        hunks,
    })
}

/// The result of applying hunks to an old file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patched {
    pub lines: Vec<Vec<u8>>,
    pub missing_trailing_newline: bool,
}

/// Applies hunks to the old file's lines. Context and deleted lines must
/// match exactly.
pub fn apply_hunks<L: AsRef<[u8]>>(old: &[L], old_missing_newline: bool, hunks: &[Hunk]) -> Result<Patched> {
    let mut out: Vec<Vec<u8>> = Vec::with_capacity(old.len());
    let mut missing = old_missing_newline;
    let mut cursor = 0;
    for h in hunks {
        let start = if h.old_count == 0 { h.old_start } else { h.old_start - 1 };
        if start < cursor || start > old.len() {
            return Err(Error::Structural(format!(
                "hunk at old line {} overlaps or exceeds the file",
                h.old_start
            )));
        }
        out.extend(old[cursor..start].iter().map(|l| l.as_ref().to_vec()));
        cursor = start;
        for line in &h.lines {
            match line.kind {
                LineKind::Context | LineKind::Delete => {
                    let expected = old.get(cursor).map(AsRef::as_ref);
                    if expected != Some(&line.text[..]) {
                        return Err(Error::Structural(format!(
                            "old line {} does not match the hunk",
                            cursor + 1
                        )));
                    }
                    cursor += 1;
                    if line.kind == LineKind::Context {
                        out.push(line.text.to_vec());
                    }
                }
                LineKind::Insert => out.push(line.text.to_vec()),
            }
        }
    }
    if cursor < old.len() {
        out.extend(old[cursor..].iter().map(|l| l.as_ref().to_vec()));
    } else if let Some(last) = hunks.last() {
        // The hunk reached the end of the old file; its final new-side line
        // decides termination.
        if let Some(l) = last.lines.iter().rev().find(|l| l.kind != LineKind::Delete) {
            missing = l.no_newline;
        } else {
            missing = false;
        }
    }
    if out.is_empty() {
        missing = false;
    }
    Ok(Patched {
        lines: out,
        missing_trailing_newline: missing,
    })
}
