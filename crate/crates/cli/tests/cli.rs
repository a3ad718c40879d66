use std::path::Path;
use std::process::{Command, Output};

use diffscope_core::fixture::ScriptedRepo;
use serde_json::Value;

fn diffscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffscope"))
        .arg("--quiet")
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, content: &[u8]) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn diff_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a", b"x\ny\n");
    let b = write(dir.path(), "b", b"x\nz\n");

    let same = diffscope(&["diff", &a, &a]);
    assert_eq!(same.status.code(), Some(0));
    assert!(same.stdout.is_empty());

    let differ = diffscope(&["diff", &a, &b]);
    assert_eq!(differ.status.code(), Some(1));
    assert_eq!(stdout(&differ), format!("--- {a}\n+++ {b}\n@@ -1,2 +1,2 @@\n x\n-y\n+z\n"));

    assert_eq!(diffscope(&["diff", "--algorithm", "nope", &a, &b]).status.code(), Some(2));
    let missing = diffscope(&["diff", &a, "/nonexistent/file"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/file"));
}

#[test]
fn diff_flags_map_to_normalization() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a", b"int x;\nreturn;\n");
    let spaced = write(dir.path(), "b", b"int  x;\n\n\nreturn;\n");

    assert_eq!(diffscope(&["diff", &a, &spaced]).status.code(), Some(1));
    assert_eq!(diffscope(&["diff", "-w", &a, &spaced]).status.code(), Some(1));
    assert_eq!(diffscope(&["diff", "--ignore-blank-lines", &a, &spaced]).status.code(), Some(1));
    let both = diffscope(&["diff", "-w", "--ignore-blank-lines", &a, &spaced]);
    assert_eq!(both.status.code(), Some(0), "{}", stdout(&both));
}

#[test]
fn diff_algorithm_and_context() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a", b"}\nU\n}\n");
    let b = write(dir.path(), "b", b"}\nX\n}\nU\n}\n");
    let hist = diffscope(&["diff", "--algorithm=histogram", &a, &b]);
    assert!(stdout(&hist).ends_with("@@ -1,3 +1,5 @@\n+}\n+X\n }\n U\n }\n"));
    let myers = diffscope(&["diff", "--context", "0", &a, &b]);
    assert!(stdout(&myers).ends_with("@@ -1,0 +2,2 @@\n+X\n+}\n"));
}

#[test]
fn compare_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a", b"}\nU\n}\n");
    let b = write(dir.path(), "b", b"}\nX\n}\nU\n}\n");
    let json = |args: &[&str]| -> Value {
        let out = diffscope(args);
        assert_eq!(out.status.code(), Some(0));
        serde_json::from_slice(&out.stdout).unwrap()
    };

    let same = json(&["compare", &a, &a]);
    assert_eq!((same["metrics_equal"].as_bool(), same["locations_equal"].as_bool()), (Some(true), Some(true)));

    let anchored = json(&["compare", "--algorithms", "myers,histogram", &a, &b]);
    assert_eq!(anchored["metrics_equal"], true);
    assert_eq!(anchored["locations_equal"], false);
    assert!(anchored.get("side_by_side").is_none());

    let twice = json(&["compare", "--algorithms", "patience,patience", &a, &b]);
    assert_eq!(twice["locations_equal"], true);

    let sbs = json(&["compare", "--side-by-side", "--width", "24", &a, &b]);
    assert!(sbs["side_by_side"].as_str().unwrap().ends_with("disagreements: 3\n"));

    assert_eq!(diffscope(&["compare", "--algorithms", "myers", &a, &b]).status.code(), Some(2));
}

#[test]
fn mine_empty_and_binary_repositories() {
    let dir = tempfile::tempdir().unwrap();
    let repo = ScriptedRepo::init(dir.path().join("repo"), "main").unwrap();
    let out = dir.path().join("out");
    let run = |format: Option<&str>| {
        let mut args = vec![
            "mine",
            "--repo",
            repo.path().to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ];
        if let Some(f) = format {
            args.extend(["--format", f]);
        }
        diffscope(&args)
    };

    assert_eq!(run(None).status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("mine.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);

    repo.commit(&[("img.bin", Some(&[0u8, 1, 2][..]))], "binary", "2020-01-01T00:00:00Z")
        .unwrap();
    std::fs::remove_file(out.join("mine.json")).unwrap();
    assert_eq!(run(Some("csv")).status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("mine.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",0,0,0,0,0"));
    assert!(!out.join("mine.json").exists());
    // No temporary files are left behind.
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 1);
}

#[test]
fn mine_reports_bad_repository_and_branch() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().to_str().unwrap();
    let out = diffscope(&["mine", "--repo", plain, "--out", plain]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a readable repository"));

    let repo = ScriptedRepo::init(dir.path().join("r"), "main").unwrap();
    repo.commit(&[("f", Some(b"x\n"))], "c", "2020-01-01T00:00:00Z").unwrap();
    let bad = diffscope(&["mine", "--repo", repo.path().to_str().unwrap(), "--branch", "nope", "--out", plain]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown branch"));
}

#[test]
fn szz_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let repo = ScriptedRepo::init(dir.path().join("repo"), "main").unwrap();
    repo.commit(&[("f", Some(b"a\n"))], "initial", "2020-01-01T00:00:00Z").unwrap();
    repo.commit(&[("f", Some(b"b\n"))], "refactor module layout", "2020-01-02T00:00:00Z")
        .unwrap();
    let repo_path = repo.path().to_str().unwrap();
    let out = dir.path().join("out");
    let out_path = out.to_str().unwrap();

    let missing = diffscope(&["szz", "--repo", repo_path, "--issues", "/nonexistent.json", "--out", out_path]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = write(dir.path(), "bad.json", br#"{"OOPS-9": {"affected_versions": ["1"], "releases": {}}}"#);
    let malformed = diffscope(&["szz", "--repo", repo_path, "--issues", &bad, "--out", out_path]);
    assert_eq!(malformed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("OOPS-9"));

    let pattern = diffscope(&["szz", "--repo", repo_path, "--issues", &bad, "--id-pattern", "("]);
    assert_eq!(pattern.status.code(), Some(2));

    let empty = write(dir.path(), "empty.json", b"{}");
    let ok = diffscope(&["szz", "--repo", repo_path, "--issues", &empty, "--out", out_path]);
    assert_eq!(ok.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&std::fs::read(out.join("szz.json")).unwrap()).unwrap();
    assert_eq!(report["candidates"], 0);
    assert_eq!(report["files"]["different"], 0);
    let csv = std::fs::read_to_string(out.join("szz_lines.csv")).unwrap();
    assert_eq!(csv, "commit,path,position,origin_commit,origin_date,release_date,valid,algorithm\n");

    // A custom keyword list turns the refactor into a candidate.
    let custom = diffscope(&[
        "szz", "--repo", repo_path, "--issues", &empty, "--out", out_path, "--keywords", "refactor",
    ]);
    assert_eq!(custom.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&std::fs::read(out.join("szz.json")).unwrap()).unwrap();
    assert_eq!(report["candidates"], 1);
    assert_eq!(report["candidates_without_bug_id"], 1);
}

#[test]
fn git_override() {
    let dir = tempfile::tempdir().unwrap();
    let repo = ScriptedRepo::init(dir.path().join("repo"), "main").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_diffscope"))
        .args(["mine", "--repo", repo.path().to_str().unwrap(), "--out"])
        .arg(dir.path())
        .env("DIFFSCOPE_GIT", "/nonexistent/git")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/git"));
    let flag = diffscope(&["mine", "--git", "/other/git", "--repo", repo.path().to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&flag.stderr).contains("/other/git"));
}
