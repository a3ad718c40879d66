use std::collections::HashMap;

use super::Sequence;

/// Maps both sequences onto dense integer ids so the algorithms compare
/// `u32`s instead of byte strings.
pub(super) fn intern(old: &Sequence, new: &Sequence) -> (Vec<u32>, Vec<u32>) {
    let mut ids: HashMap<&[u8], u32> = HashMap::with_capacity(old.len() + new.len());
    let mut out = [Vec::with_capacity(old.len()), Vec::with_capacity(new.len())];
    for (seq, dst) in [old, new].into_iter().zip(out.iter_mut()) {
        for t in seq.tokens() {
            let next = ids.len() as u32;
            dst.push(*ids.entry(t.key()).or_insert(next));
        }
    }
    let [a, b] = out;
    (a, b)
}
