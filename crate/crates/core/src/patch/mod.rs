//! Hunks, unified-diff text, and side-by-side comparison of two scripts.

mod hunk;
mod side_by_side;
mod unified;

pub use hunk::{build_hunks, Hunk, HunkLine, LineKind, DEFAULT_CONTEXT};
pub use side_by_side::{pairing_disagreements, render_side_by_side};
pub use unified::{apply_hunks, hunk_header, parse_unified, render_unified, Patched, UnifiedPatch};
