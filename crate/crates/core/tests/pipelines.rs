use diffscope_core::analyzer::{analyze_commit, summarize_project};
use diffscope_core::diff::{AlgorithmId, NormalizationFlags};
use diffscope_core::fixture::{mining_fixture, szz_fixture, ScriptedRepo};
use diffscope_core::git::GitRepo;
use diffscope_core::szz::{
    assemble_report, candidate_bug_lines, find_bugfix_candidates, trace_candidate, trace_origins, BugFixCandidate,
    IssueDb, DEFAULT_ID_PATTERN, DEFAULT_KEYWORDS,
};

const PAIR: [AlgorithmId; 2] = [AlgorithmId::Myers, AlgorithmId::Histogram];

#[test]
fn mining_fixture_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let fx = mining_fixture(dir.path()).unwrap();
    let repo = GitRepo::open(fx.repo.path()).unwrap();
    let commits = repo.list_commits("main").unwrap();
    assert_eq!(commits.len(), 20);
    let verdicts: Vec<_> = commits
        .iter()
        .map(|c| analyze_commit(&repo, c, PAIR, NormalizationFlags::MINING).unwrap())
        .collect();
    let loc: Vec<&str> = verdicts.iter().filter(|v| v.locations_different).map(|v| v.commit.as_str()).collect();
    let met: Vec<&str> = verdicts.iter().filter(|v| v.metrics_different).map(|v| v.commit.as_str()).collect();
    assert_eq!(loc, fx.locations_different.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(met, fx.metrics_different.iter().map(String::as_str).collect::<Vec<_>>());

    // The binary-only commit is present with nothing compared.
    assert!(verdicts[6].files.is_empty());
    let report = summarize_project(&verdicts);
    assert_eq!(report.commits.total, 20);
    assert_eq!(report.commits.locations_different, 3);
    assert_eq!(report.commits.metrics_different, 2);
    assert_eq!(report.files.metrics_different, 2);
}

#[test]
fn szz_fixture_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let fx = szz_fixture(dir.path()).unwrap();
    let repo = GitRepo::open(fx.repo.path()).unwrap();
    let commits = repo.list_commits("main").unwrap();
    assert_eq!(commits.len(), 8);
    let candidates = find_bugfix_candidates(&commits, &DEFAULT_KEYWORDS, DEFAULT_ID_PATTERN).unwrap();
    let ids: Vec<&str> = candidates.iter().map(|c| c.commit.as_str()).collect();
    assert_eq!(ids, vec![fx.valid_fix.as_str(), fx.invalid_fix.as_str()]);

    let myers = candidate_bug_lines(&repo, &candidates[0], AlgorithmId::Myers).unwrap();
    let hist = candidate_bug_lines(&repo, &candidates[0], AlgorithmId::Histogram).unwrap();
    assert_eq!(myers.iter().map(|l| l.position).collect::<Vec<_>>(), vec![4]);
    assert_eq!(hist.iter().map(|l| l.position).collect::<Vec<_>>(), vec![2]);

    let traces: Vec<_> = candidates.iter().map(|c| trace_candidate(&repo, c, PAIR).unwrap()).collect();
    for origins in &traces[0].origins {
        assert_eq!(origins.len(), 1);
        assert_eq!(origins[0].origin_commit, fx.introducing);
    }
    assert_eq!(traces[1].origins[0][0].origin_commit, fx.commits[4]);

    let issues = IssueDb::from_json(&fx.issues_json).unwrap();
    let (report, lines) = assemble_report(&traces, &issues, PAIR);
    assert_eq!(lines.len(), 4);
    for t in report.tally.algorithms {
        assert_eq!(
            (t.valid_lines, t.valid_files, t.valid_bug_introducing_commits, t.valid_bug_fix_commits),
            (1, 1, 1, 1)
        );
    }
    assert_eq!((report.tally.files.same, report.tally.files.different), (0, 1));
    assert_eq!(report.tally.bug_fix_commits.different, 1);
    for l in &lines {
        assert_eq!(l.valid, l.origin.origin_date < l.release_date);
        assert_eq!(l.valid, l.fix_commit == fx.valid_fix);
    }
}

#[test]
fn szz_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let s = ScriptedRepo::init(dir.path(), "main").unwrap();
    let root = s.commit(&[("f", Some(b"a\nb\n"))], "fix ROOT-1 at root", "2020-01-01T00:00:00Z").unwrap();
    let add = s.commit(&[("f", Some(b"a\nb\nc\n"))], "fix: only adds", "2020-01-02T00:00:00Z").unwrap();
    let repo = GitRepo::open(s.path()).unwrap();
    let commits = repo.list_commits("main").unwrap();
    let candidates = find_bugfix_candidates(&commits, &["fix"], DEFAULT_ID_PATTERN).unwrap();
    assert_eq!(candidates.len(), 2);
    assert!(candidate_bug_lines(&repo, &candidates[0], AlgorithmId::Myers).unwrap().is_empty());
    assert!(candidate_bug_lines(&repo, &candidates[1], AlgorithmId::Myers).unwrap().is_empty());
    assert!(trace_origins(&repo, &candidates[1], Vec::new()).is_empty());

    // A path missing at the parent is dropped rather than failing the run.
    let ghost = BugFixCandidate {
        commit: add.clone(),
        parent: Some(root),
        bug_ids: Vec::new(),
        keywords: Vec::new(),
    };
    let line = diffscope_core::szz::DeletedLine {
        path: "nope".into(),
        position: 1,
        key: "x".into(),
        algorithm: AlgorithmId::Myers,
    };
    assert!(trace_origins(&repo, &ghost, vec![line]).is_empty());
}
