use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::diff::{ensure_same_inputs, Edit, EditScript};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OldStatus {
    Paired(usize),
    Deleted,
}

struct Layout {
    old: Vec<OldStatus>,
    /// Inserted new positions, grouped by the number of old lines consumed
    /// before them.
    inserts: Vec<Vec<usize>>,
    new_paired: Vec<bool>,
    old_text: Vec<String>,
    new_text: Vec<String>,
}

impl Layout {
    fn new(script: &EditScript) -> Result<Layout> {
        let mut l = Layout {
            old: vec![OldStatus::Deleted; script.old_len],
            inserts: vec![Vec::new(); script.old_len + 1],
            new_paired: vec![false; script.new_len],
            old_text: vec![String::new(); script.old_len],
            new_text: vec![String::new(); script.new_len],
        };
        let bad = |p: usize| Error::Structural(format!("position {p} outside the script's sequences"));
        let mut consumed = 0;
        for r in script.all_records() {
            let text = String::from_utf8_lossy(r.line().raw()).into_owned();
            match r {
                Edit::Equal { old, new, .. } => {
                    let (o, n) = (old.checked_sub(1).ok_or_else(|| bad(old))?, new.checked_sub(1).ok_or_else(|| bad(new))?);
                    if o >= script.old_len || n >= script.new_len {
                        return Err(bad(old.max(new)));
                    }
                    l.old[o] = OldStatus::Paired(new);
                    l.new_paired[n] = true;
                    l.old_text[o] = text.clone();
                    l.new_text[n] = text;
                    consumed = old;
                }
                Edit::Delete { old, .. } => {
                    let o = old.checked_sub(1).filter(|&o| o < script.old_len).ok_or_else(|| bad(old))?;
                    l.old_text[o] = text;
                    consumed = old;
                }
                Edit::Insert { new, .. } => {
                    let n = new.checked_sub(1).filter(|&n| n < script.new_len).ok_or_else(|| bad(new))?;
                    l.inserts[consumed].push(new);
                    l.new_text[n] = text;
                }
            }
        }
        Ok(l)
    }
}

/// Equal pairs present in exactly one of the two scripts.
pub fn pairing_disagreements(a: &EditScript, b: &EditScript) -> Result<BTreeSet<(usize, usize)>> {
    ensure_same_inputs(a, b)?;
    let pa: BTreeSet<_> = a.equal_pairs().collect();
    let pb: BTreeSet<_> = b.equal_pairs().collect();
    Ok(pa.symmetric_difference(&pb).copied().collect())
}

fn fit(s: &str, width: usize) -> String {
    let mut out: String = s.chars().take(width).collect();
    let len = out.chars().count();
    out.extend(std::iter::repeat_n(' ', width - len));
    out
}

/// Two-column view of two scripts over the same file pair. Rows where the
/// scripts pair lines differently carry a `!` in the gutter.
///
/// Each column is `width` characters wide. A cell shows the old line number,
/// the new line number (or `-` for a deletion, `+` before an insertion) and
/// the text.
pub fn render_side_by_side(a: &EditScript, b: &EditScript, width: usize) -> Result<String> {
    ensure_same_inputs(a, b)?;
    let (la, lb) = (Layout::new(a)?, Layout::new(b)?);
    let text_width = width.saturating_sub(11);

    let old_cell = |l: &Layout, o: usize| match l.old[o] {
        OldStatus::Paired(n) => fit(&format!("{:>4} {:>4}  {}", o + 1, n, fit(&l.old_text[o], text_width)), width),
        OldStatus::Deleted => fit(&format!("{:>4}    -  {}", o + 1, fit(&l.old_text[o], text_width)), width),
    };
    let insert_cell = |l: &Layout, n: Option<&usize>| match n {
        Some(&n) => fit(&format!("   + {:>4}  {}", n, fit(&l.new_text[n - 1], text_width)), width),
        None => fit("", width),
    };

    let mut rows: Vec<(String, bool, String)> = Vec::new();
    for slot in 0..=a.old_len {
        let (ia, ib) = (&la.inserts[slot], &lb.inserts[slot]);
        for k in 0..ia.len().max(ib.len()) {
            let (na, nb) = (ia.get(k), ib.get(k));
            let differs = na.is_some_and(|&n| lb.new_paired[n - 1]) || nb.is_some_and(|&n| la.new_paired[n - 1]);
            rows.push((insert_cell(&la, na), differs, insert_cell(&lb, nb)));
        }
        if slot < a.old_len {
            rows.push((old_cell(&la, slot), la.old[slot] != lb.old[slot], old_cell(&lb, slot)));
        }
    }

    let marks = rows.iter().filter(|r| r.1).count();
    let mut out = String::new();
    let _ = writeln!(out, "{} | {}", fit("A", width), fit("B", width));
    for (left, differs, right) in rows {
        let gutter = if differs { '!' } else { '|' };
        let _ = writeln!(out, "{left} {gutter} {}", right.trim_end());
    }
    let _ = writeln!(out, "disagreements: {marks}");
    Ok(out)
}
