//! Read-only access to a git repository through the `git` executable.
//!
//! Only plumbing commands with machine-readable output are used (`-z`,
//! `--porcelain`, `cat-file --batch`), and the locale is pinned to `C`.
//! A [`GitRepo`] keeps a long-lived `cat-file --batch` child for blob reads
//! and is therefore not `Sync`; concurrent miners open one per worker.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::OsStr;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use chrono::{DateTime, FixedOffset, TimeZone};
use serde::Serialize;

use crate::error::{Error, Result};

/// Environment variable naming the git executable to run.
pub const GIT_ENV: &str = "DIFFSCOPE_GIT";

/// Bytes inspected for a NUL when classifying a blob as binary.
pub const BINARY_PROBE_LEN: usize = 8000;

pub fn is_binary(content: &[u8]) -> bool {
    content[..content.len().min(BINARY_PROBE_LEN)].contains(&0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommitMeta {
    pub id: String,
    pub parents: Vec<String>,
    pub author_date: DateTime<FixedOffset>,
    pub message: String,
}

impl CommitMeta {
    pub fn first_parent(&self) -> Option<&str> {
        self.parents.first().map(String::as_str)
    }
}

/// A file that differs between a commit and its first parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileChange {
    pub path: String,
    pub old_blob: Option<Vec<u8>>,
    pub new_blob: Option<Vec<u8>>,
    pub is_binary: bool,
}

/// Which commit last touched a line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineOrigin {
    /// 1-based line number in the blamed version.
    pub line: usize,
    pub commit: String,
    pub author_date: DateTime<FixedOffset>,
}

struct CatFile {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Drop for CatFile {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct GitRepo {
    path: PathBuf,
    git: PathBuf,
    cat_file: RefCell<Option<CatFile>>,
}

impl std::fmt::Debug for GitRepo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GitRepo")
            .field("path", &self.path)
            .field("git", &self.git)
            .finish()
    }
}

/// The git executable from [`GIT_ENV`], or `git` from `PATH`.
pub fn default_git() -> PathBuf {
    std::env::var_os(GIT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("git"))
}

impl GitRepo {
    pub fn open(path: impl AsRef<Path>) -> Result<GitRepo> {
        GitRepo::open_with(path, default_git())
    }

    pub fn open_with(path: impl AsRef<Path>, git: impl Into<PathBuf>) -> Result<GitRepo> {
        let repo = GitRepo {
            path: path.as_ref().to_path_buf(),
            git: git.into(),
            cat_file: RefCell::new(None),
        };
        if !repo.path.is_dir() {
            return Err(Error::NotARepository(repo.path));
        }
        match repo.run(["rev-parse", "--git-dir"]) {
            Ok(_) => Ok(repo),
            Err(Error::Git { .. }) => Err(Error::NotARepository(repo.path)),
            Err(e) => Err(e),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn git(&self) -> &Path {
        &self.git
    }

    fn command(&self) -> Command {
        let mut cmd = Command::new(&self.git);
        cmd.arg("-C")
            .arg(&self.path)
            .args(["-c", "core.quotepath=off"])
            .env("LC_ALL", "C")
            .env("LANG", "C")
            .env("GIT_PAGER", "cat")
            .stdin(Stdio::null());
        cmd
    }

    fn run<I, S>(&self, args: I) -> Result<Vec<u8>>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<OsStr>,
    {
        let args: Vec<_> = args.into_iter().map(|a| a.as_ref().to_os_string()).collect();
        let output = self.command().args(&args).output().map_err(|source| Error::Spawn {
            program: self.git.display().to_string(),
            source,
        })?;
        if output.status.success() {
            Ok(output.stdout)
        } else {
            Err(Error::Git {
                args: args
                    .iter()
                    .map(|a| a.to_string_lossy())
                    .collect::<Vec<_>>()
                    .join(" "),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            })
        }
    }

    fn resolve(&self, rev: &str) -> Option<String> {
        let out = self
            .run(["rev-parse", "--verify", "--quiet", &format!("{rev}^{{commit}}")])
            .ok()?;
        Some(String::from_utf8_lossy(&out).trim().to_string())
    }

    /// First-parent history of `branch`, oldest first. A repository without
    /// any commits yields an empty list.
    pub fn list_commits(&self, branch: &str) -> Result<Vec<CommitMeta>> {
        let Some(tip) = self.resolve(branch) else {
            let refs = self.run(["for-each-ref", "--count=1"])?;
            let unborn = refs.is_empty() && self.resolve("HEAD").is_none();
            return if unborn {
                Ok(Vec::new())
            } else {
                Err(Error::UnknownBranch(branch.to_string()))
            };
        };
        let out = self.run([
            "log",
            "--first-parent",
            "--reverse",
            "--format=tformat:%H%x00%P%x00%aI%x00%B%x00",
            &tip,
        ])?;
        parse_log(&out)
    }

    /// Metadata of a single commit.
    pub fn commit(&self, rev: &str) -> Result<CommitMeta> {
        let id = self
            .resolve(rev)
            .ok_or_else(|| Error::UnknownCommit(rev.to_string()))?;
        let out = self.run([
            "log",
            "-1",
            "--format=tformat:%H%x00%P%x00%aI%x00%B%x00",
            &id,
        ])?;
        parse_log(&out)?
            .pop()
            .ok_or_else(|| Error::UnknownCommit(rev.to_string()))
    }

    /// Files differing between `commit` and its first parent; every file for
    /// a root commit. Renames show up as a delete plus an add.
    pub fn changed_files(&self, commit: &CommitMeta) -> Result<Vec<FileChange>> {
        self.changed_files_between(commit.first_parent(), &commit.id)
    }

    /// Files differing between `parent` (or the empty tree) and `commit`.
    pub fn changed_files_between(&self, parent: Option<&str>, commit: &str) -> Result<Vec<FileChange>> {
        if self.resolve(commit).is_none() {
            return Err(Error::UnknownCommit(commit.to_string()));
        }
        let out = match parent {
            Some(parent) => self.run(["diff-tree", "-r", "-z", "--no-renames", parent, commit])?,
            None => self.run([
                "diff-tree",
                "-r",
                "-z",
                "--no-renames",
                "--root",
                "--no-commit-id",
                commit,
            ])?,
        };
        let mut changes = Vec::new();
        for entry in parse_diff_tree(&out)? {
            // Submodule entries have no blob to read.
            if entry.old_mode == "160000" || entry.new_mode == "160000" {
                continue;
            }
            let old_blob = entry.old_sha.map(|s| self.blob(&s)).transpose()?;
            let new_blob = entry.new_sha.map(|s| self.blob(&s)).transpose()?;
            if old_blob.is_none() && new_blob.is_none() {
                continue;
            }
            let is_binary = old_blob.as_deref().is_some_and(is_binary)
                || new_blob.as_deref().is_some_and(is_binary);
            changes.push(FileChange {
                path: entry.path,
                old_blob,
                new_blob,
                is_binary,
            });
        }
        Ok(changes)
    }

    /// Contents of `path` at `rev`, or `None` if the path does not exist there.
    pub fn file_at(&self, rev: &str, path: &str) -> Result<Option<Vec<u8>>> {
        match self.run(["rev-parse", "--verify", "--quiet", &format!("{rev}:{path}")]) {
            Ok(sha) => self.blob(String::from_utf8_lossy(&sha).trim()).map(Some),
            Err(Error::Git { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Reads a blob through the shared `cat-file --batch` process.
    pub fn blob(&self, sha: &str) -> Result<Vec<u8>> {
        let mut slot = self.cat_file.borrow_mut();
        if slot.is_none() {
            let mut child = self
                .command()
                .args(["cat-file", "--batch"])
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::null())
                .spawn()
                .map_err(|source| Error::Spawn {
                    program: self.git.display().to_string(),
                    source,
                })?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
            *slot = Some(CatFile { child, stdin, stdout });
        }
        let cat = slot.as_mut().expect("initialized above");
        let result = (|| -> Result<Vec<u8>> {
            writeln!(cat.stdin, "{sha}")?;
            cat.stdin.flush()?;
            let mut header = String::new();
            cat.stdout.read_line(&mut header)?;
            let fields: Vec<&str> = header.split_whitespace().collect();
            match fields.as_slice() {
                [_, "blob", size] => {
                    let size: usize = size
                        .parse()
                        .map_err(|_| Error::Parse(format!("cat-file header `{}`", header.trim())))?;
                    let mut buf = vec![0; size + 1];
                    cat.stdout.read_exact(&mut buf)?;
                    buf.pop();
                    Ok(buf)
                }
                [_, "missing"] => Err(Error::UnknownCommit(sha.to_string())),
                _ => Err(Error::Parse(format!("cat-file header `{}`", header.trim()))),
            }
        })();
        if matches!(result, Err(Error::Io(_)) | Err(Error::Parse(_))) {
            // The stream is out of sync; start a fresh process next time.
            *slot = None;
        }
        result
    }

    /// Origin of every line of `path` as it exists at `rev`.
    pub fn blame(&self, rev: &str, path: &str) -> Result<Vec<LineOrigin>> {
        if self.file_at(rev, path)?.is_none() {
            return Err(Error::PathAbsent {
                commit: rev.to_string(),
                path: path.to_string(),
            });
        }
        let out = self.run(["blame", "--porcelain", rev, "--", path])?;
        parse_blame(&out)
    }
}

fn parse_log(out: &[u8]) -> Result<Vec<CommitMeta>> {
    let fields: Vec<&[u8]> = out.split(|&b| b == 0).collect();
    let mut commits = Vec::new();
    for chunk in fields.chunks(4) {
        if chunk.len() < 4 {
            if chunk.iter().all(|f| f.iter().all(u8::is_ascii_whitespace)) {
                break;
            }
            return Err(Error::Parse("truncated log record".into()));
        }
        let text = |b: &[u8]| String::from_utf8_lossy(b).into_owned();
        let id = text(chunk[0]).trim().to_string();
        let parents = text(chunk[1]).split_whitespace().map(str::to_string).collect();
        let date = text(chunk[2]);
        let author_date = DateTime::parse_from_rfc3339(date.trim())
            .map_err(|e| Error::Parse(format!("author date `{date}`: {e}")))?;
        let message = text(chunk[3]).trim_end().to_string();
        commits.push(CommitMeta {
            id,
            parents,
            author_date,
            message,
        });
    }
    Ok(commits)
}

struct TreeEntry {
    old_mode: String,
    new_mode: String,
    old_sha: Option<String>,
    new_sha: Option<String>,
    path: String,
}

fn parse_diff_tree(out: &[u8]) -> Result<Vec<TreeEntry>> {
    let mut parts = out.split(|&b| b == 0).filter(|p| !p.is_empty());
    let mut entries = Vec::new();
    while let Some(meta) = parts.next() {
        let meta = String::from_utf8_lossy(meta);
        let fields: Vec<&str> = meta.trim_start_matches(':').split(' ').collect();
        let [old_mode, new_mode, old_sha, new_sha, _status] = fields.as_slice() else {
            return Err(Error::Parse(format!("diff-tree entry `{meta}`")));
        };
        let path = parts
            .next()
            .ok_or_else(|| Error::Parse("diff-tree entry without path".into()))?;
        let sha = |s: &str| (!s.bytes().all(|b| b == b'0')).then(|| s.to_string());
        entries.push(TreeEntry {
            old_mode: old_mode.to_string(),
            new_mode: new_mode.to_string(),
            old_sha: sha(old_sha),
            new_sha: sha(new_sha),
            path: String::from_utf8_lossy(path).into_owned(),
        });
    }
    Ok(entries)
}

fn parse_blame(out: &[u8]) -> Result<Vec<LineOrigin>> {
    let mut dates: HashMap<String, (i64, String)> = HashMap::new();
    let mut pending: Vec<(usize, String)> = Vec::new();
    let mut current: Option<String> = None;
    for line in out.split(|&b| b == b'\n') {
        if line.first() == Some(&b'\t') {
            current = None;
            continue;
        }
        let line = String::from_utf8_lossy(line);
        if line.is_empty() {
            continue;
        }
        match &current {
            None => {
                let mut it = line.split(' ');
                let sha = it.next().unwrap_or_default().to_string();
                let _orig: usize = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("blame header `{line}`")))?;
                let final_line: usize = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("blame header `{line}`")))?;
                pending.push((final_line, sha.clone()));
                current = Some(sha);
            }
            Some(sha) => {
                if let Some(t) = line.strip_prefix("author-time ") {
                    let t = t.parse().map_err(|_| Error::Parse(format!("author-time `{t}`")))?;
                    dates.entry(sha.clone()).or_insert((0, String::new())).0 = t;
                } else if let Some(tz) = line.strip_prefix("author-tz ") {
                    dates.entry(sha.clone()).or_insert((0, String::new())).1 = tz.to_string();
                }
            }
        }
    }
    let mut origins = pending
        .into_iter()
        .map(|(line, commit)| {
            let (time, tz) = dates
                .get(&commit)
                .ok_or_else(|| Error::Parse(format!("blame lacks metadata for {commit}")))?;
            Ok(LineOrigin {
                line,
                author_date: epoch_with_zone(*time, tz)?,
                commit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    origins.sort_by_key(|o| o.line);
    Ok(origins)
}

fn epoch_with_zone(time: i64, tz: &str) -> Result<DateTime<FixedOffset>> {
    let bad = || Error::Parse(format!("timezone `{tz}`"));
    let (sign, digits) = match tz.as_bytes().first() {
        Some(b'-') => (-1, &tz[1..]),
        Some(b'+') => (1, &tz[1..]),
        _ => return Err(bad()),
    };
    if digits.len() != 4 {
        return Err(bad());
    }
    let hours: i32 = digits[..2].parse().map_err(|_| bad())?;
    let minutes: i32 = digits[2..].parse().map_err(|_| bad())?;
    let offset = FixedOffset::east_opt(sign * (hours * 3600 + minutes * 60)).ok_or_else(bad)?;
    offset.timestamp_opt(time, 0).single().ok_or_else(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_probe_only_looks_at_prefix() {
        assert!(is_binary(b"a\0b"));
        assert!(!is_binary(b"plain text\n"));
        let mut late = vec![b'a'; BINARY_PROBE_LEN];
        late.push(0);
        assert!(!is_binary(&late));
    }

    #[test]
    fn parses_log_records() {
        let out = b"aaa\0\x002020-01-01T00:00:00+02:00\0first\n\nbody\n\0\nbbb\0aaa\x002020-01-02T00:00:00Z\0second\n\0\n";
        let commits = parse_log(out).unwrap();
        assert_eq!(commits.len(), 2);
        assert_eq!(commits[0].id, "aaa");
        assert!(commits[0].parents.is_empty());
        assert_eq!(commits[0].message, "first\n\nbody");
        assert_eq!(commits[1].parents, vec!["aaa"]);
        assert_eq!(commits[0].author_date.offset().local_minus_utc(), 7200);
    }

    #[test]
    fn parses_porcelain_blame() {
        let sha1 = "1".repeat(40);
        let sha2 = "2".repeat(40);
        let out = format!(
            "{sha1} 1 1 1\nauthor A\nauthor-time 1577836800\nauthor-tz +0000\nfilename f\n\tone\n\
             {sha2} 2 2 1\nauthor B\nauthor-time 1580515200\nauthor-tz -0130\nfilename f\n\ttwo\n\
             {sha1} 3 3\n\tthree\n"
        );
        let origins = parse_blame(out.as_bytes()).unwrap();
        assert_eq!(origins.len(), 3);
        assert_eq!(origins[0].commit, sha1);
        assert_eq!(origins[2].commit, sha1);
        assert_eq!(origins[1].author_date.timestamp(), 1_580_515_200);
        assert_eq!(origins[1].author_date.offset().local_minus_utc(), -5400);
    }

    #[test]
    fn zone_parsing_rejects_garbage() {
        assert!(epoch_with_zone(0, "0000").is_err());
        assert!(epoch_with_zone(0, "+00").is_err());
        assert!(epoch_with_zone(0, "+0530").is_ok());
    }
}
