//! SZZ with two diff algorithms side by side: find bug-fix commits, blame
//! the lines they delete, validate the introducing commits against the
//! release dates of the affected versions, and compare the outcomes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::diff::{diff, split_lines, AlgorithmId, Edit, NormalizationFlags};
use crate::error::{Error, Result};
use crate::git::{CommitMeta, FileChange, GitRepo};

pub const DEFAULT_KEYWORDS: [&str; 4] = ["bug", "fix", "defect", "patch"];

/// Uppercase project key, dash, digits (`PROJ-123`).
pub const DEFAULT_ID_PATTERN: &str = r"\b[A-Z][A-Z0-9]+-[0-9]+\b";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub bug: String,
    pub affected_versions: Vec<String>,
    pub releases: BTreeMap<String, DateTime<FixedOffset>>,
}

/// Bug reports keyed by tracker id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IssueDb {
    records: BTreeMap<String, IssueRecord>,
}

/// Parses a release date: a plain `YYYY-MM-DD` (midnight UTC), an RFC 3339
/// timestamp, or a zone-less `YYYY-MM-DDTHH:MM:SS` taken as UTC.
pub fn parse_release_date(s: &str) -> Option<DateTime<FixedOffset>> {
    let utc = FixedOffset::east_opt(0).expect("zero offset");
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Some(d);
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().with_timezone(&utc));
    }
    let naive = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f").ok()?;
    Some(naive.and_utc().with_timezone(&utc))
}

impl IssueDb {
    /// Builds a database without checking record invariants.
    pub fn new(records: impl IntoIterator<Item = IssueRecord>) -> IssueDb {
        IssueDb {
            records: records.into_iter().map(|r| (r.bug.clone(), r)).collect(),
        }
    }

    /// Reads `{bug: {"affected_versions": [..], "releases": {version: date}}}`.
    /// Every affected version needs a release date; errors name the record.
    pub fn from_json(text: &str) -> Result<IssueDb> {
        let root: Value = serde_json::from_str(text)?;
        let Value::Object(map) = root else {
            return Err(Error::IssueRecord {
                record: "<root>".into(),
                message: "expected an object keyed by bug id".into(),
            });
        };
        let mut records = BTreeMap::new();
        for (bug, value) in map {
            let fail = |message: String| Error::IssueRecord {
                record: bug.clone(),
                message,
            };
            let versions = value
                .get("affected_versions")
                .and_then(Value::as_array)
                .ok_or_else(|| fail("missing `affected_versions` list".into()))?;
            let affected_versions = versions
                .iter()
                .map(|v| v.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| fail("`affected_versions` must hold strings".into()))?;
            if affected_versions.is_empty() {
                return Err(fail("no affected versions".into()));
            }
            let raw = value
                .get("releases")
                .and_then(Value::as_object)
                .ok_or_else(|| fail("missing `releases` object".into()))?;
            let mut releases = BTreeMap::new();
            for (version, date) in raw {
                let text = date
                    .as_str()
                    .ok_or_else(|| fail(format!("release date of `{version}` is not a string")))?;
                let parsed = parse_release_date(text)
                    .ok_or_else(|| fail(format!("bad release date `{text}` for `{version}`")))?;
                releases.insert(version.clone(), parsed);
            }
            if let Some(v) = affected_versions.iter().find(|v| !releases.contains_key(*v)) {
                return Err(fail(format!("affected version `{v}` has no release date")));
            }
            records.insert(
                bug.clone(),
                IssueRecord {
                    bug,
                    affected_versions,
                    releases,
                },
            );
        }
        Ok(IssueDb { records })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<IssueDb> {
        IssueDb::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, bug: &str) -> Option<&IssueRecord> {
        self.records.get(bug)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn earliest_affected_release(issues: &IssueDb, bug: &str) -> Result<DateTime<FixedOffset>> {
    let record = issues.get(bug).ok_or_else(|| Error::UnknownBug(bug.to_string()))?;
    let mut earliest: Option<DateTime<FixedOffset>> = None;
    for version in &record.affected_versions {
        let date = *record.releases.get(version).ok_or_else(|| Error::MissingRelease {
            bug: bug.to_string(),
            version: version.clone(),
        })?;
        if earliest.is_none_or(|e| date < e) {
            earliest = Some(date);
        }
    }
    earliest.ok_or_else(|| Error::MissingRelease {
        bug: bug.to_string(),
        version: String::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BugFixCandidate {
    pub commit: String,
    pub parent: Option<String>,
    pub bug_ids: Vec<String>,
    pub keywords: Vec<String>,
}

/// Message matcher: whole-word keywords, case-insensitive, plus a bug-id
/// pattern.
#[derive(Debug, Clone)]
pub struct CandidateMatcher {
    keywords: Vec<(String, Regex)>,
    id_pattern: Regex,
}

impl CandidateMatcher {
    pub fn new<S: AsRef<str>>(keywords: &[S], id_pattern: &str) -> Result<CandidateMatcher> {
        let keywords = keywords
            .iter()
            .map(|k| k.as_ref().trim())
            .filter(|k| !k.is_empty())
            .map(|k| Ok((k.to_lowercase(), Regex::new(&format!(r"(?i)\b{}\b", regex::escape(k)))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CandidateMatcher {
            keywords,
            id_pattern: Regex::new(id_pattern)?,
        })
    }

    pub fn default_matcher() -> CandidateMatcher {
        CandidateMatcher::new(&DEFAULT_KEYWORDS, DEFAULT_ID_PATTERN).expect("default patterns compile")
    }

    pub fn classify(&self, commit: &CommitMeta) -> Option<BugFixCandidate> {
        let keywords: Vec<String> = self
            .keywords
            .iter()
            .filter(|(_, re)| re.is_match(&commit.message))
            .map(|(k, _)| k.clone())
            .collect();
        let mut bug_ids: Vec<String> = Vec::new();
        for m in self.id_pattern.find_iter(&commit.message) {
            if !bug_ids.iter().any(|b| b == m.as_str()) {
                bug_ids.push(m.as_str().to_string());
            }
        }
        if keywords.is_empty() && bug_ids.is_empty() {
            return None;
        }
        Some(BugFixCandidate {
            commit: commit.id.clone(),
            parent: commit.first_parent().map(str::to_string),
            bug_ids,
            keywords,
        })
    }
}

pub fn find_bugfix_candidates<S: AsRef<str>>(
    commits: &[CommitMeta],
    keywords: &[S],
    id_pattern: &str,
) -> Result<Vec<BugFixCandidate>> {
    let matcher = CandidateMatcher::new(keywords, id_pattern)?;
    Ok(commits.iter().filter_map(|c| matcher.classify(c)).collect())
}

/// A line deleted by a fix, at its position in the parent version.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DeletedLine {
    pub path: String,
    pub position: usize,
    pub key: String,
    pub algorithm: AlgorithmId,
}

/// A deleted line together with the commit that introduced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BugLineOrigin {
    #[serde(flatten)]
    pub line: DeletedLine,
    pub origin_commit: String,
    pub origin_date: DateTime<FixedOffset>,
}

/// Delete records of `alg` over already-fetched file changes.
pub fn deleted_lines(changes: &[FileChange], alg: AlgorithmId, flags: NormalizationFlags) -> Vec<DeletedLine> {
    let mut out = Vec::new();
    for change in changes {
        if change.is_binary {
            continue;
        }
        let Some(old_blob) = change.old_blob.as_deref() else {
            continue;
        };
        let old = split_lines(old_blob, flags);
        let new = split_lines(change.new_blob.as_deref().unwrap_or_default(), flags);
        for r in &diff(&old, &new, alg).records {
            if let Edit::Delete { old, line } = r {
                out.push(DeletedLine {
                    path: change.path.clone(),
                    position: *old,
                    key: String::from_utf8_lossy(line.key()).into_owned(),
                    algorithm: alg,
                });
            }
        }
    }
    out
}

/// Lines deleted by the candidate according to `alg`, under the mining
/// normalization flags. Root commits have nothing to delete and are skipped.
pub fn candidate_bug_lines(repo: &GitRepo, candidate: &BugFixCandidate, alg: AlgorithmId) -> Result<Vec<DeletedLine>> {
    let Some(parent) = candidate.parent.as_deref() else {
        log::info!("skipping root commit {}", candidate.commit);
        return Ok(Vec::new());
    };
    let changes = repo.changed_files_between(Some(parent), &candidate.commit)?;
    Ok(deleted_lines(&changes, alg, NormalizationFlags::MINING))
}

/// Blames each line at the candidate's parent. Lines whose file cannot be
/// blamed are dropped with a warning.
pub fn trace_origins(repo: &GitRepo, candidate: &BugFixCandidate, lines: Vec<DeletedLine>) -> Vec<BugLineOrigin> {
    let Some(parent) = candidate.parent.as_deref() else {
        return Vec::new();
    };
    let mut blames: HashMap<String, Option<Vec<crate::git::LineOrigin>>> = HashMap::new();
    let mut out = Vec::with_capacity(lines.len());
    for line in lines {
        let blame = blames.entry(line.path.clone()).or_insert_with(|| match repo.blame(parent, &line.path) {
            Ok(b) => Some(b),
            Err(e) => {
                log::warn!("blame of {} at {parent} failed: {e}", line.path);
                None
            }
        });
        let Some(blame) = blame else { continue };
        match blame.iter().find(|o| o.line == line.position) {
            Some(origin) => out.push(BugLineOrigin {
                origin_commit: origin.commit.clone(),
                origin_date: origin.author_date,
                line,
            }),
            None => log::warn!("no blame entry for {}:{} at {parent}", line.path, line.position),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidatedLine {
    pub fix_commit: String,
    #[serde(flatten)]
    pub origin: BugLineOrigin,
    pub bug_id: String,
    pub release_date: DateTime<FixedOffset>,
    pub valid: bool,
}

/// Marks each line valid iff it was introduced strictly before `release`.
/// Instants are compared in UTC.
pub fn validate_lines(
    fix_commit: &str,
    origins: &[BugLineOrigin],
    release: DateTime<FixedOffset>,
    bug: &str,
) -> Vec<ValidatedLine> {
    origins
        .iter()
        .map(|o| ValidatedLine {
            fix_commit: fix_commit.to_string(),
            origin: o.clone(),
            bug_id: bug.to_string(),
            release_date: release,
            valid: o.origin_date.with_timezone(&Utc) < release.with_timezone(&Utc),
        })
        .collect()
}

/// The earliest release over all of the candidate's known bug ids, with the
/// id it belongs to. Unknown ids are logged and ignored.
pub fn candidate_release(issues: &IssueDb, candidate: &BugFixCandidate) -> Option<(String, DateTime<FixedOffset>)> {
    let mut best: Option<(String, DateTime<FixedOffset>)> = None;
    for bug in &candidate.bug_ids {
        match earliest_affected_release(issues, bug) {
            Ok(date) => {
                if best.as_ref().is_none_or(|(_, d)| date < *d) {
                    best = Some((bug.clone(), date));
                }
            }
            Err(e) => log::warn!("{}: {e}", candidate.commit),
        }
    }
    best
}

/// Everything traced for one candidate, for both algorithms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTrace {
    pub candidate: BugFixCandidate,
    pub origins: [Vec<BugLineOrigin>; 2],
}

/// Diffs a candidate with both algorithms and blames the deleted lines.
pub fn trace_candidate(
    repo: &GitRepo,
    candidate: &BugFixCandidate,
    algorithms: [AlgorithmId; 2],
) -> Result<CandidateTrace> {
    let mut origins: [Vec<BugLineOrigin>; 2] = Default::default();
    if let Some(parent) = candidate.parent.as_deref() {
        let changes = repo.changed_files_between(Some(parent), &candidate.commit)?;
        for (slot, alg) in origins.iter_mut().zip(algorithms) {
            let lines = deleted_lines(&changes, alg, NormalizationFlags::MINING);
            *slot = trace_origins(repo, candidate, lines);
        }
    } else {
        log::info!("skipping root commit {}", candidate.commit);
    }
    Ok(CandidateTrace {
        candidate: candidate.clone(),
        origins,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AlgorithmTally {
    pub algorithm: AlgorithmId,
    pub traced_lines: usize,
    pub valid_lines: usize,
    pub valid_files: usize,
    pub valid_bug_introducing_commits: usize,
    pub valid_bug_fix_commits: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PositionAgreement {
    pub same: usize,
    pub different: usize,
    pub pct_same: f64,
    pub pct_different: f64,
}

impl PositionAgreement {
    fn new(same: usize, different: usize) -> PositionAgreement {
        let total = same + different;
        let pct = |n: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
        PositionAgreement {
            same,
            different,
            pct_same: pct(same),
            pct_different: pct(different),
        }
    }
}

/// Per-algorithm counts plus where the two algorithms put valid lines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SzzTally {
    pub algorithms: [AlgorithmTally; 2],
    /// Files (per fix commit) holding valid lines under either algorithm.
    pub files: PositionAgreement,
    /// Fix commits with valid lines under either algorithm.
    pub bug_fix_commits: PositionAgreement,
}

/// Counts over validated lines. `validated` may hold lines of both
/// algorithms; lines of other algorithms are ignored.
pub fn roll_up(validated: &[ValidatedLine], algorithms: [AlgorithmId; 2]) -> SzzTally {
    type FileKey = (String, String);
    let mut positions: [BTreeMap<FileKey, BTreeSet<usize>>; 2] = Default::default();
    let mut tallies = algorithms.map(|algorithm| AlgorithmTally {
        algorithm,
        ..AlgorithmTally::default()
    });
    for (i, alg) in algorithms.into_iter().enumerate() {
        let lines: Vec<&ValidatedLine> = validated.iter().filter(|v| v.origin.line.algorithm == alg).collect();
        let valid: Vec<&&ValidatedLine> = lines.iter().filter(|v| v.valid).collect();
        for v in &valid {
            positions[i]
                .entry((v.fix_commit.clone(), v.origin.line.path.clone()))
                .or_default()
                .insert(v.origin.line.position);
        }
        let intro: BTreeSet<&str> = valid.iter().map(|v| v.origin.origin_commit.as_str()).collect();
        let fixes: BTreeSet<&str> = valid.iter().map(|v| v.fix_commit.as_str()).collect();
        tallies[i].traced_lines = lines.len();
        tallies[i].valid_lines = valid.len();
        tallies[i].valid_files = positions[i].len();
        tallies[i].valid_bug_introducing_commits = intro.len();
        tallies[i].valid_bug_fix_commits = fixes.len();
    }
    if algorithms[0] == algorithms[1] {
        positions[1] = positions[0].clone();
    }

    let empty = BTreeSet::new();
    let files: BTreeSet<&FileKey> = positions[0].keys().chain(positions[1].keys()).collect();
    let mut fix_differs: BTreeMap<&str, bool> = BTreeMap::new();
    let (mut same, mut different) = (0, 0);
    for key in files {
        let a = positions[0].get(key).unwrap_or(&empty);
        let b = positions[1].get(key).unwrap_or(&empty);
        let differs = a != b;
        if differs {
            different += 1;
        } else {
            same += 1;
        }
        *fix_differs.entry(key.0.as_str()).or_default() |= differs;
    }
    let fixes_different = fix_differs.values().filter(|d| **d).count();
    SzzTally {
        algorithms: tallies,
        files: PositionAgreement::new(same, different),
        bug_fix_commits: PositionAgreement::new(fix_differs.len() - fixes_different, fixes_different),
    }
}

/// A candidate that was traced but not validated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnvalidatedCandidate {
    pub commit: String,
    pub bug_ids: Vec<String>,
    pub keywords: Vec<String>,
    pub reason: &'static str,
    pub traced_lines: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SzzReport {
    pub candidates: usize,
    pub validated_candidates: usize,
    pub candidates_without_bug_id: usize,
    pub candidates_without_issue_data: usize,
    #[serde(flatten)]
    pub tally: SzzTally,
    pub unvalidated: Vec<UnvalidatedCandidate>,
}

/// Validates every trace and rolls the result up. The returned lines are
/// ordered by fix commit, path, position, then algorithm.
pub fn assemble_report(
    traces: &[CandidateTrace],
    issues: &IssueDb,
    algorithms: [AlgorithmId; 2],
) -> (SzzReport, Vec<ValidatedLine>) {
    let mut validated = Vec::new();
    let mut unvalidated = Vec::new();
    let (mut no_id, mut no_data) = (0, 0);
    for t in traces {
        let c = &t.candidate;
        let release = if c.bug_ids.is_empty() {
            no_id += 1;
            Err("no bug id")
        } else {
            candidate_release(issues, c).ok_or_else(|| {
                no_data += 1;
                "no issue data"
            })
        };
        match release {
            Ok((bug, date)) => {
                for origins in &t.origins {
                    validated.extend(validate_lines(&c.commit, origins, date, &bug));
                }
            }
            Err(reason) => unvalidated.push(UnvalidatedCandidate {
                commit: c.commit.clone(),
                bug_ids: c.bug_ids.clone(),
                keywords: c.keywords.clone(),
                reason,
                traced_lines: [t.origins[0].len(), t.origins[1].len()],
            }),
        }
    }
    let order = |a: AlgorithmId| algorithms.iter().position(|x| *x == a);
    validated.sort_by(|x, y| {
        (&x.fix_commit, &x.origin.line.path, x.origin.line.position, order(x.origin.line.algorithm)).cmp(&(
            &y.fix_commit,
            &y.origin.line.path,
            y.origin.line.position,
            order(y.origin.line.algorithm),
        ))
    });
    let report = SzzReport {
        candidates: traces.len(),
        validated_candidates: traces.len() - no_id - no_data,
        candidates_without_bug_id: no_id,
        candidates_without_issue_data: no_data,
        tally: roll_up(&validated, algorithms),
        unvalidated,
    };
    (report, validated)
}

pub const LINES_CSV_HEADER: [&str; 8] = [
    "commit",
    "path",
    "position",
    "origin_commit",
    "origin_date",
    "release_date",
    "valid",
    "algorithm",
];

/// One CSV row per validated line.
pub fn lines_csv(lines: &[ValidatedLine]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(LINES_CSV_HEADER).map_err(io)?;
    for v in lines {
        let l = &v.origin.line;
        w.write_record([
            v.fix_commit.as_str(),
            l.path.as_str(),
            &l.position.to_string(),
            &v.origin.origin_commit,
            &v.origin.origin_date.to_rfc3339(),
            &v.release_date.to_rfc3339(),
            if v.valid { "true" } else { "false" },
            l.algorithm.name(),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
