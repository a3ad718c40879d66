//! Git's four line-diff algorithms and a mining toolchain that measures how
//! much their outputs disagree: churn metrics, change locations, and SZZ
//! bug-introducing-change identification.

pub mod analyzer;
pub mod diff;
pub mod error;
pub mod fixture;
pub mod git;
pub mod patch;
pub mod szz;

pub use error::{Error, Result};
