//! Patience and histogram diff.
//!
//! Both split the problem at anchor lines and recurse into the regions
//! between anchors. A region whose lines include some that occur exactly once
//! on each side anchors on the longest order-consistent chain of those lines
//! (the patience step). When there are none, patience falls back to Myers,
//! while histogram picks the common line with the fewest old-side
//! occurrences, grows it into the longest matching run, and splits there.
//! Regions with no usable common line fall back to Myers.

use std::ops::Range;

use super::myers;

#[derive(Debug, Clone, Copy)]
pub(super) enum Strategy {
    Patience,
    Histogram { max_occurrence: usize },
}

/// A separator chosen while splitting a region.
///
/// Regions are 0-based half-open index ranges; `old_pos`/`new_pos` are the
/// 1-based positions of the separator line itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatorEvent {
    pub old_region: Range<usize>,
    pub new_region: Range<usize>,
    pub old_pos: usize,
    pub new_pos: usize,
    /// Occurrences of the separator line in the old side of the region.
    pub occurrences: usize,
}

type Region = (Range<usize>, Range<usize>);

pub(super) fn matches(
    old: &[u32],
    new: &[u32],
    strategy: Strategy,
    observer: &mut dyn FnMut(&SeparatorEvent),
) -> Vec<(usize, usize)> {
    let ids = old.iter().chain(new).max().map_or(0, |&m| m as usize + 1);
    let mut ctx = Ctx {
        old,
        new,
        strategy,
        observer,
        counts: Counts::new(ids),
        out: Vec::new(),
    };
    let mut stack: Vec<Region> = vec![(0..old.len(), 0..new.len())];
    while let Some((ar, br)) = stack.pop() {
        ctx.region(ar, br, &mut stack);
    }
    let mut out = ctx.out;
    out.sort_unstable();
    out
}

struct Counts {
    old: Vec<u32>,
    new: Vec<u32>,
    old_first: Vec<usize>,
    new_first: Vec<usize>,
    touched: Vec<u32>,
}

impl Counts {
    fn new(ids: usize) -> Counts {
        Counts {
            old: vec![0; ids],
            new: vec![0; ids],
            old_first: vec![0; ids],
            new_first: vec![0; ids],
            touched: Vec::new(),
        }
    }

    fn fill(&mut self, a: &[u32], ar: &Range<usize>, b: &[u32], br: &Range<usize>) {
        for i in ar.clone() {
            let id = a[i] as usize;
            if self.old[id] == 0 && self.new[id] == 0 {
                self.touched.push(a[i]);
            }
            if self.old[id] == 0 {
                self.old_first[id] = i;
            }
            self.old[id] += 1;
        }
        for j in br.clone() {
            let id = b[j] as usize;
            if self.old[id] == 0 && self.new[id] == 0 {
                self.touched.push(b[j]);
            }
            if self.new[id] == 0 {
                self.new_first[id] = j;
            }
            self.new[id] += 1;
        }
    }

    fn clear(&mut self) {
        for id in self.touched.drain(..) {
            self.old[id as usize] = 0;
            self.new[id as usize] = 0;
        }
    }
}

struct Ctx<'a, 'o> {
    old: &'a [u32],
    new: &'a [u32],
    strategy: Strategy,
    observer: &'o mut dyn FnMut(&SeparatorEvent),
    counts: Counts,
    out: Vec<(usize, usize)>,
}

impl Ctx<'_, '_> {
    fn region(&mut self, ar: Range<usize>, br: Range<usize>, stack: &mut Vec<Region>) {
        if ar.is_empty() || br.is_empty() {
            return;
        }
        let (a, b) = (self.old, self.new);
        self.counts.fill(a, &ar, b, &br);

        let uniques: Vec<(usize, usize)> = ar
            .clone()
            .filter_map(|i| {
                let id = a[i] as usize;
                (self.counts.old[id] == 1 && self.counts.new[id] == 1)
                    .then(|| (i, self.counts.new_first[id]))
            })
            .collect();

        if !uniques.is_empty() {
            let chain = longest_chain(&uniques);
            for &(i, j) in &chain {
                (self.observer)(&SeparatorEvent {
                    old_region: ar.clone(),
                    new_region: br.clone(),
                    old_pos: i + 1,
                    new_pos: j + 1,
                    occurrences: 1,
                });
            }
            self.counts.clear();
            self.walk_chain(ar, br, &chain, stack);
            return;
        }

        let separator = match self.strategy {
            Strategy::Patience => None,
            Strategy::Histogram { max_occurrence } => self.lowest_occurrence(&ar, max_occurrence),
        };
        self.counts.clear();

        match separator {
            Some((id, occurrences)) => {
                let (i, j, run) = self.longest_run(id, &ar, &br);
                (self.observer)(&SeparatorEvent {
                    old_region: ar.clone(),
                    new_region: br.clone(),
                    old_pos: i + 1,
                    new_pos: j + 1,
                    occurrences,
                });
                let (si, sj) = (run.start, j - (i - run.start));
                let len = run.len();
                self.out.extend((0..len).map(|k| (si + k, sj + k)));
                stack.push((si + len..ar.end, sj + len..br.end));
                stack.push((ar.start..si, br.start..sj));
            }
            None => {
                let pairs = myers::matches(&a[ar.clone()], &b[br.clone()]);
                self.out
                    .extend(pairs.into_iter().map(|(i, j)| (i + ar.start, j + br.start)));
            }
        }
    }

    /// Common line with the fewest old-side occurrences (at most `cap`); ties go
    /// to fewer new-side occurrences, then the earliest old position.
    fn lowest_occurrence(&self, ar: &Range<usize>, cap: usize) -> Option<(u32, usize)> {
        let c = &self.counts;
        ar.clone()
            .filter_map(|i| {
                let id = self.old[i] as usize;
                let (oc, nc) = (c.old[id] as usize, c.new[id] as usize);
                (nc > 0 && oc <= cap && c.old_first[id] == i).then_some((oc, nc, i, id as u32))
            })
            .min()
            .map(|(oc, _, _, id)| (id, oc))
    }

    /// Among the occurrences of `id`, the pairing that grows into the longest
    /// run of equal lines. Returns the pair and the run's old-side range.
    fn longest_run(&self, id: u32, ar: &Range<usize>, br: &Range<usize>) -> (usize, usize, Range<usize>) {
        let (a, b) = (self.old, self.new);
        let mut best: Option<(usize, usize, Range<usize>)> = None;
        let new_occ: Vec<usize> = br.clone().filter(|&j| b[j] == id).take(1024).collect();
        for i in ar.clone().filter(|&i| a[i] == id) {
            for &j in &new_occ {
                let mut back = 0;
                while i - back > ar.start && j - back > br.start && a[i - back - 1] == b[j - back - 1] {
                    back += 1;
                }
                let mut fwd = 1;
                while i + fwd < ar.end && j + fwd < br.end && a[i + fwd] == b[j + fwd] {
                    fwd += 1;
                }
                let run = i - back..i + fwd;
                if best.as_ref().is_none_or(|(_, _, r)| run.len() > r.len()) {
                    best = Some((i, j, run));
                }
            }
        }
        best.expect("separator occurs on both sides")
    }

    /// Emits the chain anchors, growing each into adjacent equal lines, and
    /// queues the gaps between them.
    fn walk_chain(
        &mut self,
        ar: Range<usize>,
        br: Range<usize>,
        chain: &[(usize, usize)],
        stack: &mut Vec<Region>,
    ) {
        let (a, b) = (self.old, self.new);
        let (mut line1, mut line2) = (ar.start, br.start);
        let mut idx = 0;
        let mut gaps = Vec::new();
        loop {
            let (next1, next2) = match chain.get(idx) {
                Some(&(mut n1, mut n2)) => {
                    while n1 > line1 && n2 > line2 && a[n1 - 1] == b[n2 - 1] {
                        n1 -= 1;
                        n2 -= 1;
                        self.out.push((n1, n2));
                    }
                    (n1, n2)
                }
                None => (ar.end, br.end),
            };
            while line1 < next1 && line2 < next2 && a[line1] == b[line2] {
                self.out.push((line1, line2));
                line1 += 1;
                line2 += 1;
            }
            if next1 > line1 || next2 > line2 {
                gaps.push((line1..next1, line2..next2));
            }
            let Some(&(mut f1, mut f2)) = chain.get(idx) else {
                break;
            };
            self.out.push((f1, f2));
            while chain.get(idx + 1) == Some(&(f1 + 1, f2 + 1)) {
                idx += 1;
                f1 += 1;
                f2 += 1;
                self.out.push((f1, f2));
            }
            line1 = f1 + 1;
            line2 = f2 + 1;
            idx += 1;
        }
        // Process gaps left to right.
        stack.extend(gaps.into_iter().rev());
    }
}

/// Longest chain of pairs increasing in both coordinates. `pairs` must be
/// sorted by the first coordinate.
fn longest_chain(pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut tops: Vec<usize> = Vec::new();
    let mut prev: Vec<Option<usize>> = vec![None; pairs.len()];
    for (idx, &(_, j)) in pairs.iter().enumerate() {
        let pile = tops.partition_point(|&t| pairs[t].1 < j);
        prev[idx] = pile.checked_sub(1).map(|p| tops[p]);
        if pile == tops.len() {
            tops.push(idx);
        } else {
            tops[pile] = idx;
        }
    }
    let mut chain = Vec::with_capacity(tops.len());
    let mut cur = tops.last().copied();
    while let Some(idx) = cur {
        chain.push(pairs[idx]);
        cur = prev[idx];
    }
    chain.reverse();
    chain
}
