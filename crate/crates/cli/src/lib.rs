//! Command-line front end: `diff`, `compare`, `mine` and `szz`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use diffscope_core::analyzer::{self, CommitVerdict, FileVerdict, MiningSummary};
use diffscope_core::diff::{diff, split_lines, AlgorithmId, NormalizationFlags};
use diffscope_core::git::{default_git, GitRepo};
use diffscope_core::patch::{build_hunks, render_side_by_side, render_unified, DEFAULT_CONTEXT};
use diffscope_core::szz::{self, CandidateMatcher, CandidateTrace, IssueDb};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "diffscope", version, about = "Line diffs with git's four algorithms, and how much they disagree")]
pub struct Cli {
    /// git executable to run (defaults to $DIFFSCOPE_GIT, then `git`).
    #[arg(long, global = true, value_name = "PATH")]
    pub git: Option<PathBuf>,

    /// Suppress progress messages.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unified diff of two files. Exits 1 when they differ.
    Diff(DiffArgs),
    /// Compare two algorithms on one file pair and print the verdict as JSON.
    Compare(CompareArgs),
    /// Compare two algorithms over every commit of a branch.
    Mine(MineArgs),
    /// Run SZZ with two algorithms and compare the bug-introducing lines.
    Szz(SzzArgs),
}

#[derive(Debug, Clone, Copy, Args)]
pub struct FlagArgs {
    /// Ignore whitespace when comparing lines.
    #[arg(short = 'w', long = "ignore-all-space")]
    pub ignore_whitespace: bool,

    /// Ignore changes whose lines are all blank.
    #[arg(long)]
    pub ignore_blank_lines: bool,
}

impl FlagArgs {
    fn flags(self) -> NormalizationFlags {
        NormalizationFlags {
            ignore_whitespace: self.ignore_whitespace,
            ignore_blank_lines: self.ignore_blank_lines,
        }
    }
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    #[arg(long, default_value = "myers")]
    pub algorithm: AlgorithmId,

    #[command(flatten)]
    pub flags: FlagArgs,

    /// Lines of context around each change.
    #[arg(long, short = 'U', default_value_t = DEFAULT_CONTEXT)]
    pub context: usize,

    pub old: PathBuf,
    pub new: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_delimiter = ',', default_values = ["myers", "histogram"])]
    pub algorithms: Vec<AlgorithmId>,

    #[command(flatten)]
    pub flags: FlagArgs,

    /// Include a two-column rendering marking rows the algorithms pair differently.
    #[arg(long)]
    pub side_by_side: bool,

    /// Column width of the side-by-side rendering.
    #[arg(long, default_value_t = 40)]
    pub width: usize,

    pub old: PathBuf,
    pub new: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RepoArgs {
    #[arg(long, value_name = "PATH")]
    pub repo: PathBuf,

    #[arg(long, default_value = "HEAD")]
    pub branch: String,

    #[arg(long, value_delimiter = ',', default_values = ["myers", "histogram"])]
    pub algorithms: Vec<AlgorithmId>,

    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Write only this format (default: both).
    #[arg(long)]
    pub format: Option<Format>,

    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub repo: RepoArgs,
}

#[derive(Debug, Args)]
pub struct SzzArgs {
    #[command(flatten)]
    pub repo: RepoArgs,

    /// Issue database (JSON).
    #[arg(long, value_name = "PATH")]
    pub issues: PathBuf,

    /// Comma-separated bug-fix keywords.
    #[arg(long, value_delimiter = ',', default_values = szz::DEFAULT_KEYWORDS)]
    pub keywords: Vec<String>,

    /// Regular expression for bug ids in commit messages.
    #[arg(long, default_value = szz::DEFAULT_ID_PATTERN)]
    pub id_pattern: String,
}

pub const MINE_CSV: &str = "mine.csv";
pub const MINE_JSON: &str = "mine.json";
pub const SZZ_JSON: &str = "szz.json";
pub const SZZ_CSV: &str = "szz_lines.csv";

/// Runs a parsed command line. Failures map to exit status 2.
pub fn run(cli: Cli) -> ExitCode {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("diffscope: error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let ctx = Ctx {
        git: cli.git.unwrap_or_else(default_git),
        quiet: cli.quiet,
    };
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Diff(args) => {
            let differ = cmd_diff(&args, &mut stdout)?;
            Ok(ExitCode::from(u8::from(differ)))
        }
        Command::Compare(args) => {
            cmd_compare(&args, &mut stdout)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Mine(args) => {
            cmd_mine(&ctx, &args)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Szz(args) => {
            cmd_szz(&ctx, &args)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

pub struct Ctx {
    pub git: PathBuf,
    pub quiet: bool,
}

impl Ctx {
    fn progress(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Writes the unified diff to `out`; returns whether the files differ.
pub fn cmd_diff(args: &DiffArgs, out: &mut impl Write) -> Result<bool> {
    let flags = args.flags.flags();
    let old = split_lines(&read(&args.old)?, flags);
    let new = split_lines(&read(&args.new)?, flags);
    let hunks = build_hunks(&diff(&old, &new, args.algorithm), args.context);
    if hunks.is_empty() {
        return Ok(false);
    }
    out.write_all(&render_unified(
        &hunks,
        &args.old.display().to_string(),
        &args.new.display().to_string(),
    ))?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct CompareOutput<'a> {
    algorithms: [AlgorithmId; 2],
    #[serde(flatten)]
    verdict: &'a FileVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    side_by_side: Option<String>,
}

fn pair(algs: &[AlgorithmId]) -> Result<[AlgorithmId; 2]> {
    match algs {
        [a, b] => Ok([*a, *b]),
        _ => bail!("expected exactly two algorithms, got {}", algs.len()),
    }
}

pub fn cmd_compare(args: &CompareArgs, out: &mut impl Write) -> Result<FileVerdict> {
    let algorithms = pair(&args.algorithms)?;
    let flags = args.flags.flags();
    let old = split_lines(&read(&args.old)?, flags);
    let new = split_lines(&read(&args.new)?, flags);
    let a = diff(&old, &new, algorithms[0]);
    let b = diff(&old, &new, algorithms[1]);
    let verdict = analyzer::compare_file(&a, &b, &args.new.display().to_string())?;
    let side_by_side = args
        .side_by_side
        .then(|| render_side_by_side(&a, &b, args.width))
        .transpose()?;
    let output = CompareOutput {
        algorithms,
        verdict: &verdict,
        side_by_side,
    };
    serde_json::to_writer_pretty(&mut *out, &output)?;
    writeln!(out)?;
    Ok(verdict)
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

/// Writes `bytes` to `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    let target = dir.join(name);
    tmp.persist(&target)
        .with_context(|| format!("cannot write {}", target.display()))?;
    Ok(())
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn wants(format: Option<Format>, f: Format) -> bool {
    format.is_none_or(|x| x == f)
}

fn to_json(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Per-commit verdicts over the branch's first-parent history, in history order.
pub fn mine(ctx: &Ctx, args: &RepoArgs) -> Result<(Vec<CommitVerdict>, [AlgorithmId; 2])> {
    let algorithms = pair(&args.algorithms)?;
    let repo = GitRepo::open_with(&args.repo, &ctx.git)?;
    let commits = repo.list_commits(&args.branch)?;
    ctx.progress(format_args!("mining {} commits", commits.len()));
    let done = std::sync::atomic::AtomicUsize::new(0);
    let verdicts = pool(args.workers)?.install(|| {
        commits
            .par_iter()
            .map_init(
                || GitRepo::open_with(&args.repo, &ctx.git),
                |repo, commit| {
                    let repo = repo.as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
                    let v = analyzer::analyze_commit(repo, commit, algorithms, NormalizationFlags::MINING)
                        .with_context(|| format!("commit {}", commit.id))?;
                    let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                    if n.is_multiple_of(500) {
                        ctx.progress(format_args!("  {n}/{}", commits.len()));
                    }
                    Ok(v)
                },
            )
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((verdicts, algorithms))
}

pub fn cmd_mine(ctx: &Ctx, args: &MineArgs) -> Result<()> {
    let args = &args.repo;
    prepare_out(&args.out)?;
    let (verdicts, algorithms) = mine(ctx, args)?;
    let report = analyzer::summarize_project(&verdicts);
    if wants(args.format, Format::Csv) {
        write_atomic(&args.out, MINE_CSV, analyzer::commits_csv(&verdicts).as_bytes())?;
    }
    if wants(args.format, Format::Json) {
        let summary = MiningSummary {
            algorithms,
            flags: NormalizationFlags::MINING,
            report,
        };
        write_atomic(&args.out, MINE_JSON, &to_json(&summary)?)?;
    }
    ctx.progress(format_args!(
        "{} commits: {} with different metrics, {} with different locations",
        report.commits.total, report.commits.metrics_different, report.commits.locations_different
    ));
    Ok(())
}

pub fn cmd_szz(ctx: &Ctx, args: &SzzArgs) -> Result<()> {
    let issues = IssueDb::from_path(&args.issues)
        .with_context(|| format!("issue database {}", args.issues.display()))?;
    let matcher = CandidateMatcher::new(&args.keywords, &args.id_pattern)?;
    let opts = &args.repo;
    let algorithms = pair(&opts.algorithms)?;
    prepare_out(&opts.out)?;
    let repo = GitRepo::open_with(&opts.repo, &ctx.git)?;
    let commits = repo.list_commits(&opts.branch)?;
    let candidates: Vec<_> = commits.iter().filter_map(|c| matcher.classify(c)).collect();
    ctx.progress(format_args!(
        "{} bug-fix candidates among {} commits",
        candidates.len(),
        commits.len()
    ));
    let traces: Vec<CandidateTrace> = pool(opts.workers)?.install(|| {
        candidates
            .par_iter()
            .map_init(
                || GitRepo::open_with(&opts.repo, &ctx.git),
                |repo, candidate| {
                    let repo = repo.as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
                    szz::trace_candidate(repo, candidate, algorithms)
                        .with_context(|| format!("commit {}", candidate.commit))
                },
            )
            .collect::<Result<Vec<_>>>()
    })?;
    let (report, lines) = szz::assemble_report(&traces, &issues, algorithms);
    if wants(opts.format, Format::Csv) {
        write_atomic(&opts.out, SZZ_CSV, &szz::lines_csv(&lines)?)?;
    }
    if wants(opts.format, Format::Json) {
        write_atomic(&opts.out, SZZ_JSON, &to_json(&report)?)?;
    }
    for t in &report.tally.algorithms {
        ctx.progress(format_args!(
            "{}: {} valid lines in {} files, {} introducing commits, {} fix commits",
            t.algorithm, t.valid_lines, t.valid_files, t.valid_bug_introducing_commits, t.valid_bug_fix_commits
        ));
    }
    Ok(())
}
