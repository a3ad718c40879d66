use std::path::PathBuf;

/// Errors raised across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An edit script does not fit the sequences it is applied to or compared against.
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("LCS oracle refused {old_len}x{new_len} input (limit {limit} cells)")]
    OracleTooLarge {
        old_len: usize,
        new_len: usize,
        limit: usize,
    },

    #[error("failed to run `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },

    #[error("`git {args}` failed: {stderr}")]
    Git { args: String, stderr: String },

    #[error("not a readable repository: {0}")]
    NotARepository(PathBuf),

    #[error("unknown branch `{0}`")]
    UnknownBranch(String),

    #[error("unknown commit `{0}`")]
    UnknownCommit(String),

    #[error("path `{path}` does not exist at commit {commit}")]
    PathAbsent { commit: String, path: String },

    #[error("malformed git output: {0}")]
    Parse(String),

    #[error("invalid pattern: {0}")]
    Pattern(#[from] regex::Error),

    #[error("issue database record `{record}`: {message}")]
    IssueRecord { record: String, message: String },

    #[error("bug `{0}` is not in the issue database")]
    UnknownBug(String),

    #[error("bug `{bug}` lists version `{version}` without a release date")]
    MissingRelease { bug: String, version: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
