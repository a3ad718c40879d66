//! Churn metrics, change locations, and disagreement between two algorithms
//! at file, commit and project level.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::diff::{diff, ensure_same_inputs, split_lines, AlgorithmId, Edit, EditScript, NormalizationFlags};
use crate::error::Result;
use crate::git::{CommitMeta, FileChange, GitRepo};

/// Number of added (NLA) and deleted (NLD) lines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ChurnMetrics {
    pub nla: usize,
    pub nld: usize,
}

/// A changed line: its position on its own side and its key.
pub type Location = (usize, Arc<[u8]>);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeLocations {
    pub added: BTreeSet<Location>,
    pub deleted: BTreeSet<Location>,
}

impl ChangeLocations {
    pub fn metrics(&self) -> ChurnMetrics {
        ChurnMetrics {
            nla: self.added.len(),
            nld: self.deleted.len(),
        }
    }
}

impl Serialize for ChangeLocations {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let render = |set: &BTreeSet<Location>| -> Vec<(usize, String)> {
            set.iter()
                .map(|(p, k)| (*p, String::from_utf8_lossy(k).into_owned()))
                .collect()
        };
        let mut st = s.serialize_struct("ChangeLocations", 2)?;
        st.serialize_field("added", &render(&self.added))?;
        st.serialize_field("deleted", &render(&self.deleted))?;
        st.end()
    }
}

pub fn change_metrics(script: &EditScript) -> ChurnMetrics {
    ChurnMetrics {
        nla: script.inserts(),
        nld: script.deletes(),
    }
}

pub fn change_locations(script: &EditScript) -> ChangeLocations {
    let mut loc = ChangeLocations::default();
    for r in &script.records {
        match r {
            Edit::Insert { new, line } => {
                loc.added.insert((*new, line.shared_key()));
            }
            Edit::Delete { old, line } => {
                loc.deleted.insert((*old, line.shared_key()));
            }
            Edit::Equal { .. } => {}
        }
    }
    loc
}

/// One algorithm's view of a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileSide {
    pub metrics: ChurnMetrics,
    pub locations: ChangeLocations,
}

impl FileSide {
    pub fn of(script: &EditScript) -> FileSide {
        FileSide {
            metrics: change_metrics(script),
            locations: change_locations(script),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileVerdict {
    pub path: String,
    pub metrics_equal: bool,
    pub locations_equal: bool,
    pub a: FileSide,
    pub b: FileSide,
}

/// Compares two scripts computed over the same old/new contents.
pub fn compare_file(a: &EditScript, b: &EditScript, path: &str) -> Result<FileVerdict> {
    ensure_same_inputs(a, b)?;
    let (a, b) = (FileSide::of(a), FileSide::of(b));
    Ok(FileVerdict {
        path: path.to_string(),
        metrics_equal: a.metrics == b.metrics,
        locations_equal: a.locations == b.locations,
        a,
        b,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommitVerdict {
    pub commit: String,
    pub files: Vec<FileVerdict>,
    pub metrics_different: bool,
    pub locations_different: bool,
}

impl CommitVerdict {
    pub fn files_metrics_different(&self) -> usize {
        self.files.iter().filter(|f| !f.metrics_equal).count()
    }

    pub fn files_locations_different(&self) -> usize {
        self.files.iter().filter(|f| !f.locations_equal).count()
    }
}

pub fn aggregate_commit(mut verdicts: Vec<FileVerdict>, commit: &str) -> CommitVerdict {
    verdicts.sort_by(|x, y| x.path.cmp(&y.path));
    CommitVerdict {
        commit: commit.to_string(),
        metrics_different: verdicts.iter().any(|f| !f.metrics_equal),
        locations_different: verdicts.iter().any(|f| !f.locations_equal),
        files: verdicts,
    }
}

/// Same/different counts for one granularity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Tally {
    pub total: usize,
    pub metrics_same: usize,
    pub metrics_different: usize,
    pub locations_same: usize,
    pub locations_different: usize,
    pub pct_metrics_same: f64,
    pub pct_metrics_different: f64,
    pub pct_locations_same: f64,
    pub pct_locations_different: f64,
}

impl Tally {
    fn new(total: usize, metrics_different: usize, locations_different: usize) -> Tally {
        let pct = |n: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
        Tally {
            total,
            metrics_same: total - metrics_different,
            metrics_different,
            locations_same: total - locations_different,
            locations_different,
            pct_metrics_same: pct(total - metrics_different),
            pct_metrics_different: pct(metrics_different),
            pct_locations_same: pct(total - locations_different),
            pct_locations_different: pct(locations_different),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ProjectReport {
    pub files: Tally,
    pub commits: Tally,
}

pub fn summarize_project(commits: &[CommitVerdict]) -> ProjectReport {
    let files = commits.iter().map(|c| c.files.len()).sum();
    let files_m = commits.iter().map(CommitVerdict::files_metrics_different).sum();
    let files_l = commits.iter().map(CommitVerdict::files_locations_different).sum();
    let commits_m = commits.iter().filter(|c| c.metrics_different).count();
    let commits_l = commits.iter().filter(|c| c.locations_different).count();
    ProjectReport {
        files: Tally::new(files, files_m, files_l),
        commits: Tally::new(commits.len(), commits_m, commits_l),
    }
}

/// Header of the per-commit CSV.
pub const COMMIT_CSV_HEADER: &str =
    "commit,files_total,files_metrics_diff,files_locations_diff,commit_metrics_diff,commit_locations_diff";

/// One CSV row per commit, in the given order. Booleans are `0`/`1`.
pub fn commits_csv(commits: &[CommitVerdict]) -> String {
    let mut out = String::from(COMMIT_CSV_HEADER);
    out.push('\n');
    for c in commits {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.commit,
            c.files.len(),
            c.files_metrics_different(),
            c.files_locations_different(),
            u8::from(c.metrics_different),
            u8::from(c.locations_different),
        ));
    }
    out
}

/// JSON summary of a mining run.
#[derive(Debug, Clone, Serialize)]
pub struct MiningSummary {
    pub algorithms: [AlgorithmId; 2],
    pub flags: NormalizationFlags,
    #[serde(flatten)]
    pub report: ProjectReport,
}

/// Diffs one modified file with both algorithms. Binary files yield `None`.
pub fn compare_change(
    change: &FileChange,
    algorithms: [AlgorithmId; 2],
    flags: NormalizationFlags,
) -> Result<Option<FileVerdict>> {
    if change.is_binary {
        return Ok(None);
    }
    let old = split_lines(change.old_blob.as_deref().unwrap_or_default(), flags);
    let new = split_lines(change.new_blob.as_deref().unwrap_or_default(), flags);
    let a = diff(&old, &new, algorithms[0]);
    let b = diff(&old, &new, algorithms[1]);
    compare_file(&a, &b, &change.path).map(Some)
}

/// Compares both algorithms on every modified text file of a commit.
pub fn analyze_commit(
    repo: &GitRepo,
    commit: &CommitMeta,
    algorithms: [AlgorithmId; 2],
    flags: NormalizationFlags,
) -> Result<CommitVerdict> {
    let mut verdicts = Vec::new();
    for change in repo.changed_files(commit)? {
        if let Some(v) = compare_change(&change, algorithms, flags)? {
            verdicts.push(v);
        }
    }
    Ok(aggregate_commit(verdicts, &commit.id))
}
