use crate::error::{Error, Result};

use super::Sequence;

/// Largest `len(old) * len(new)` table the oracle will fill.
pub const ORACLE_CELL_LIMIT: usize = 1_000_000;

/// Exact LCS length by the full quadratic dynamic-programming table.
///
/// Kept deliberately naive: it is the reference the diff algorithms are
/// checked against.
pub fn lcs_length_oracle(old: &Sequence, new: &Sequence) -> Result<usize> {
    let (n, m) = (old.len(), new.len());
    if n.saturating_mul(m) > ORACLE_CELL_LIMIT {
        return Err(Error::OracleTooLarge {
            old_len: n,
            new_len: m,
            limit: ORACLE_CELL_LIMIT,
        });
    }
    let mut table = vec![vec![0usize; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            table[i][j] = if old.tokens()[i - 1].key() == new.tokens()[j - 1].key() {
                table[i - 1][j - 1] + 1
            } else {
                table[i - 1][j].max(table[i][j - 1])
            };
        }
    }
    Ok(table[n][m])
}
