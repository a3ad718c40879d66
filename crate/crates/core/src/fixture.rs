//! Scripted git repositories with fixed authors and dates, for tests and
//! reproducible demos.

use std::path::{Path, PathBuf};
use std::process::Command;

use crate::error::{Error, Result};
use crate::git::default_git;

pub struct ScriptedRepo {
    dir: PathBuf,
    git: PathBuf,
}

impl ScriptedRepo {
    /// `git init` in `dir`, created if missing, with `branch` as the initial branch.
    pub fn init(dir: impl AsRef<Path>, branch: &str) -> Result<ScriptedRepo> {
        std::fs::create_dir_all(dir.as_ref())?;
        let repo = ScriptedRepo {
            dir: dir.as_ref().to_path_buf(),
            git: default_git(),
        };
        repo.git(&["init", "-q", "-b", branch], None)?;
        repo.git(&["config", "user.name", "Fixture"], None)?;
        repo.git(&["config", "user.email", "fixture@example.com"], None)?;
        repo.git(&["config", "commit.gpgsign", "false"], None)?;
        repo.git(&["config", "core.autocrlf", "false"], None)?;
        Ok(repo)
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Runs git in the repository. `date` (any format git accepts) pins both
    /// author and committer dates.
    pub fn git(&self, args: &[&str], date: Option<&str>) -> Result<String> {
        let mut cmd = Command::new(&self.git);
        cmd.current_dir(&self.dir)
            .args(args)
            .env("GIT_CONFIG_NOSYSTEM", "1")
            .env("HOME", &self.dir)
            .env("LC_ALL", "C");
        if let Some(d) = date {
            cmd.env("GIT_AUTHOR_DATE", d).env("GIT_COMMITTER_DATE", d);
        }
        let out = cmd.output().map_err(|source| Error::Spawn {
            program: self.git.display().to_string(),
            source,
        })?;
        if !out.status.success() {
            return Err(Error::Git {
                args: args.join(" "),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
    }

    /// Writes (`Some`) or removes (`None`) files, then commits everything.
    /// Returns the new commit id.
    pub fn commit(&self, files: &[(&str, Option<&[u8]>)], message: &str, date: &str) -> Result<String> {
        for (path, content) in files {
            let full = self.dir.join(path);
            match content {
                Some(bytes) => {
                    if let Some(parent) = full.parent() {
                        std::fs::create_dir_all(parent)?;
                    }
                    std::fs::write(&full, bytes)?;
                }
                None => std::fs::remove_file(&full)?,
            }
        }
        self.git(&["add", "-A"], None)?;
        self.git(&["commit", "-q", "--allow-empty", "-m", message], Some(date))?;
        self.git(&["rev-parse", "HEAD"], None)
    }
}

type Files<'a, C> = Vec<(&'a str, Option<C>)>;

fn day(month: u32, day: u32, year: u32) -> String {
    format!("{year}-{month:02}-{day:02}T12:00:00Z")
}

/// A 20-commit history on `main` where Myers and Histogram place changed
/// lines differently in exactly three commits, two of which also differ in
/// line counts.
pub struct MiningFixture {
    pub repo: ScriptedRepo,
    pub commits: Vec<String>,
    pub locations_different: Vec<String>,
    pub metrics_different: Vec<String>,
}

pub fn mining_fixture(dir: impl AsRef<Path>) -> Result<MiningFixture> {
    let repo = ScriptedRepo::init(dir, "main")?;
    let lib = |extra: &str| format!("int one;\nint two;\nint three;\nint four;\n{extra}");
    let steps: Vec<(Files<Vec<u8>>, &str)> = vec![
        (
            vec![
                ("README.md", Some(b"# Demo\n\nA small project.\n".to_vec())),
                ("src/lib.c", Some(lib("").into_bytes())),
                ("src/braces.c", Some(b"}\nU\n}\n".to_vec())),
                ("data/m1.txt", Some(b"X\na\na\na\n".to_vec())),
                ("data/m2.txt", Some(b"Y\nb\nb\nb\n".to_vec())),
            ],
            "Initial import",
        ),
        (vec![("src/lib.c", Some(lib("int five;\n").into_bytes()))], "Add five"),
        (vec![("notes.txt", Some(b"todo\n".to_vec()))], "Add notes"),
        (vec![("src/braces.c", Some(b"}\nX\n}\nU\n}\n".to_vec()))], "Wrap block"),
        (
            vec![("README.md", Some(b"# Demo\n\nA small project.\nBuild with make.\n".to_vec()))],
            "Document build",
        ),
        (vec![("logo.bin", Some(vec![0, 1, 2, 3, 0, 255]))], "Add logo"),
        (vec![("logo.bin", Some(vec![0, 9, 9, 0]))], "Update logo"),
        (vec![("data/m1.txt", Some(b"a\na\na\nX\n".to_vec()))], "Move marker"),
        (vec![("notes.txt", None)], "Drop notes"),
        (vec![("src/lib.c", Some(lib("int five;\nint six;\n").into_bytes()))], "Add six"),
        (vec![("src/extra.c", Some(b"int e1;\nint e2;\nint e3;\n".to_vec()))], "Add extra"),
        (vec![("src/extra.c", Some(b"int e1;\nint e2b;\nint e3;\n".to_vec()))], "Rename e2"),
        (
            vec![
                ("docs/a.md", Some(b"alpha\nbeta\n".to_vec())),
                ("docs/b.md", Some(b"gamma\ndelta\n".to_vec())),
            ],
            "Add docs",
        ),
        (
            vec![
                ("data/m2.txt", Some(b"b\nb\nb\nY\n".to_vec())),
                ("docs/a.md", Some(b"alpha\nbeta\nepsilon\n".to_vec())),
            ],
            "Move second marker",
        ),
        (
            vec![("README.md", Some(b"# Demo\n\nA small project.\nBuild with make.\nRun tests.\n".to_vec()))],
            "Document tests",
        ),
        (
            vec![
                ("src/extra.c", None),
                ("src/extra2.c", Some(b"int e1;\nint e2b;\nint e3;\n".to_vec())),
            ],
            "Move extra",
        ),
        (
            vec![("src/lib.c", Some(lib("int  five;\nint six; \n").into_bytes()))],
            "Reformat",
        ),
        (
            vec![("src/lib.c", Some(lib("\nint  five;\n\nint six; \n").into_bytes()))],
            "Space out",
        ),
        (vec![("docs/b.md", Some(b"gamma\nzeta\n".to_vec()))], "Fix typo"),
        (vec![("src/lib.c", Some(lib("\nint  five;\n\nint seven;\n").into_bytes()))], "Seven"),
    ];
    let mut commits = Vec::new();
    for (i, (files, message)) in steps.iter().enumerate() {
        let files: Vec<(&str, Option<&[u8]>)> = files.iter().map(|(p, c)| (*p, c.as_deref())).collect();
        commits.push(repo.commit(&files, message, &day(3, i as u32 + 1, 2021))?);
    }
    Ok(MiningFixture {
        locations_different: vec![commits[3].clone(), commits[7].clone(), commits[13].clone()],
        metrics_different: vec![commits[7].clone(), commits[13].clone()],
        commits,
        repo,
    })
}

/// An 8-commit history with two keyword-matching fixes. `SVC-1`'s fix
/// deletes a line introduced before the affected release, at a position
/// Myers and Histogram disagree on; `SVC-2`'s fix deletes a line
/// introduced after it.
pub struct SzzFixture {
    pub repo: ScriptedRepo,
    pub commits: Vec<String>,
    pub issues_json: String,
    pub valid_fix: String,
    pub invalid_fix: String,
    pub introducing: String,
    pub disagreeing_path: String,
}

pub fn szz_fixture(dir: impl AsRef<Path>) -> Result<SzzFixture> {
    let repo = ScriptedRepo::init(dir, "main")?;
    let run_old = b"void run() {\n    step();\n    step();\n    step();\n    flush();\n}\n";
    let run_new = b"void run() {\n    step();\n    step();\n    flush();\n    step();\n}\n";
    let util = b"int parse(void);\nint emit(void);\n";
    let util_retry = b"int parse(void);\nint emit(void);\nint retry(void);\n";
    let steps: [(Files<&[u8]>, &str, String); 8] = [
        (
            vec![("src/run.c", Some(run_old)), ("README", Some(b"service\n"))],
            "Add service loop",
            day(1, 10, 2020),
        ),
        (vec![("src/util.h", Some(util))], "Add util header", day(2, 1, 2020)),
        (vec![("README", Some(b"service\nusage: run\n"))], "Document usage", day(3, 1, 2020)),
        (
            vec![("src/run.c", Some(run_new))],
            "Fix SVC-1: flush before the last step",
            day(5, 1, 2020),
        ),
        (vec![("src/util.h", Some(util_retry))], "Add retry declaration", day(8, 1, 2020)),
        (vec![("README", Some(b"service\nusage: run [opts]\n"))], "Refine usage text", day(9, 1, 2020)),
        (vec![("src/util.h", Some(util))], "Fix SVC-2: remove retry", day(10, 1, 2020)),
        (vec![("CHANGES", Some(b"1.1\n"))], "Update changelog", day(11, 1, 2020)),
    ];
    let mut commits = Vec::new();
    for (files, message, date) in &steps {
        commits.push(repo.commit(files, message, date)?);
    }
    let issues_json = r#"{
  "SVC-1": {"affected_versions": ["1.0", "1.1"], "releases": {"1.0": "2020-04-01", "1.1": "2020-06-01"}},
  "SVC-2": {"affected_versions": ["1.0"], "releases": {"1.0": "2020-04-01"}}
}
"#
    .to_string();
    Ok(SzzFixture {
        valid_fix: commits[3].clone(),
        invalid_fix: commits[6].clone(),
        introducing: commits[0].clone(),
        disagreeing_path: "src/run.c".into(),
        issues_json,
        commits,
        repo,
    })
}
