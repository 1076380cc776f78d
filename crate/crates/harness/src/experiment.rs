//! Batches of independent runs: execution, persistence and reloading.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use cbgp_core::ast::{parse_source, render_source, render_typed_source, ParsedProgram, SourceError};
use cbgp_core::evolution::{run_evolution, simplify, Evaluator, GaConfig, GenerationStats, Individual, RunResult};
use cbgp_core::problems::{problem, Case, ProblemSpec, PROBLEM_NAMES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::report::Report;

/// Worker threads get deep stacks: compilation and evaluation recurse on
/// nested chunks and expressions.
const WORKER_STACK: usize = 256 << 20;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {source}")]
    Log { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_owned(), source }
}

/// Terminal record of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub run: usize,
    pub seed: u64,
    pub generations: usize,
    pub best_generation: usize,
    pub genome: String,
    pub program: Option<String>,
    pub program_type: Option<String>,
    pub train_error: f64,
    pub size_pre: Option<usize>,
    pub simplified_genome: String,
    pub simplified_program: Option<String>,
    pub size_post: Option<usize>,
    pub train_perfect: bool,
    /// The simplified program passes every test case.
    pub test_passed: bool,
    /// Path of the program file relative to the output directory.
    pub program_file: Option<String>,
}

impl RunSummary {
    pub fn is_generalized_solution(&self) -> bool {
        self.train_perfect && self.test_passed
    }
}

/// One line of a run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Generation(GenerationStats),
    Result(RunSummary),
}

/// Everything a single run produces before it is written out.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub stats: Vec<GenerationStats>,
    /// Rendered program with type hints, written for train-perfect runs.
    pub program_text: Option<String>,
}

pub fn render_program(p: &ProblemSpec, ind: &Individual) -> Option<String> {
    ind.program.as_ref().map(|ast| render_source(ast, p.name, &p.signature.arg_names))
}

pub fn render_program_file(p: &ProblemSpec, ind: &Individual) -> Option<String> {
    let args: Vec<_> = p.signature.args().map(|(n, t)| (n.clone(), t.clone())).collect();
    ind.program.as_ref().map(|ast| render_typed_source(ast, p.name, &args))
}

/// Reads a persisted program back under the problem's environment.
pub fn load_program(p: &ProblemSpec, text: &str) -> Result<ParsedProgram, SourceError> {
    parse_source(text, &p.type_env(), &p.signature.arg_types)
}

/// Case outputs of a reloaded program must all score zero.
pub fn program_passes(p: &ProblemSpec, program: &ParsedProgram, cases: &[Case], ga: &GaConfig) -> bool {
    Evaluator::with_config(p, ga).passes(&program.ast, cases)
}

/// Random stream used by post-run simplification.
pub fn simplify_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

/// Evolves, simplifies the best individual on the training cases, then
/// checks the simplified program on the test cases.
pub fn execute_run(p: &ProblemSpec, ga: &GaConfig, run: usize, seed: u64) -> RunArtifacts {
    let RunResult { best, best_generation, generations, stats, cases } = run_evolution(p, ga, seed);
    let eval = Evaluator::with_config(p, ga);
    let simplified = simplify(&best, ga.simplification_steps, &eval, &cases.train, &mut simplify_rng(seed));
    let train_perfect = simplified.is_solution();
    let test_passed = simplified.program.as_ref().is_some_and(|ast| eval.passes(ast, &cases.test));
    let program_text = train_perfect.then(|| render_program_file(p, &simplified)).flatten();
    let summary = RunSummary {
        problem: p.name.to_owned(),
        run,
        seed,
        generations,
        best_generation,
        genome: best.genome.to_string(),
        program: render_program(p, &best),
        program_type: best.program.as_ref().map(|a| a.ty.to_string()),
        train_error: best.total_error,
        size_pre: best.program_size(),
        simplified_genome: simplified.genome.to_string(),
        simplified_program: render_program(p, &simplified),
        size_post: simplified.program_size(),
        train_perfect,
        test_passed,
        program_file: program_text.as_ref().map(|_| program_file_name(p.name, run)),
    };
    RunArtifacts { summary, stats, program_text }
}

pub fn log_file_name(problem: &str, run: usize) -> String {
    format!("{problem}/run-{run:03}.jsonl")
}

pub fn program_file_name(problem: &str, run: usize) -> String {
    format!("{problem}/run-{run:03}.clj")
}

pub fn log_lines(a: &RunArtifacts) -> String {
    let mut out = String::new();
    let records = a.stats.iter().cloned().map(LogRecord::Generation).chain([LogRecord::Result(a.summary.clone())]);
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_run(out_dir: &Path, a: &RunArtifacts) -> Result<(), HarnessError> {
    let s = &a.summary;
    let log = out_dir.join(log_file_name(&s.problem, s.run));
    if let Some(dir) = log.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(&log, log_lines(a)).map_err(io_err(&log))?;
    if let (Some(rel), Some(text)) = (&s.program_file, &a.program_text) {
        let path = out_dir.join(rel);
        fs::write(&path, format!("{text}\n")).map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>, HarnessError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|source| HarnessError::Log { path: path.to_owned(), line: i + 1, source })?;
        records.push(rec);
    }
    Ok(records)
}

/// Collects terminal records from every `<problem>/run-*.jsonl` under
/// `out_dir`, ordered by problem catalog order then run index.
pub fn collect_summaries(out_dir: &Path) -> Result<Vec<RunSummary>, HarnessError> {
    let mut found = Vec::new();
    for name in PROBLEM_NAMES {
        let dir = out_dir.join(name);
        if !dir.is_dir() {
            continue;
        }
        let mut logs: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        logs.sort();
        for log in logs {
            let summary = read_log(&log)?.into_iter().rev().find_map(|r| match r {
                LogRecord::Result(s) => Some(s),
                LogRecord::Generation(_) => None,
            });
            found.extend(summary);
        }
    }
    Ok(found)
}

/// Report over whatever runs are logged in `out_dir`.
pub fn report_from_logs(out_dir: &Path) -> Result<Report, HarnessError> {
    let summaries = collect_summaries(out_dir)?;
    let problems: Vec<String> = PROBLEM_NAMES
        .iter()
        .filter(|p| summaries.iter().any(|s| s.problem == **p))
        .map(|p| p.to_string())
        .collect();
    Ok(Report::aggregate(&problems, &summaries, &[]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunFailure {
    pub problem: String,
    pub run: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: Report,
    pub summaries: Vec<RunSummary>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentOutcome {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "run panicked".to_owned())
}

/// Runs every (problem, run index) pair on a bounded pool, persists each
/// run as it finishes, then writes `report.csv` and `report.txt`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    let out_dir = &cfg.output_dir;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let jobs: Vec<(&'static ProblemSpec, usize)> = cfg
        .problems
        .iter()
        .filter_map(|name| problem(name))
        .flat_map(|p| (0..cfg.runs).map(move |run| (p, run)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).stack_size(WORKER_STACK).build()?;
    let results: Vec<Result<RunSummary, RunFailure>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, run)| {
                let seed = cfg.seed(run);
                let failure = |message| RunFailure { problem: p.name.to_owned(), run, seed, message };
                let artifacts = catch_unwind(AssertUnwindSafe(|| execute_run(p, &cfg.ga, run, seed)))
                    .map_err(|e| failure(panic_message(e)))?;
                write_run(out_dir, &artifacts).map_err(|e| failure(e.to_string()))?;
                Ok(artifacts.summary)
            })
            .collect()
    });
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(f) => {
                eprintln!("warning: {} run {} (seed {}) failed: {}", f.problem, f.run, f.seed, f.message);
                failures.push(f);
            }
        }
    }
    let failed: Vec<(String, usize)> = failures.iter().map(|f| (f.problem.clone(), f.run)).collect();
    let report = Report::aggregate(&cfg.problems, &summaries, &failed);
    write_report(out_dir, &report)?;
    Ok(ExperimentOutcome { report, summaries, failures })
}

pub fn write_report(out_dir: &Path, report: &Report) -> Result<(), HarnessError> {
    let csv_path = out_dir.join("report.csv");
    let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    let mut w = BufWriter::new(file);
    report.write_csv(&mut w).map_err(|e| HarnessError::Io { path: csv_path.clone(), source: e.into() })?;
    w.flush().map_err(io_err(&csv_path))?;
    let txt = out_dir.join("report.txt");
    fs::write(&txt, crate::report::report_table(report)).map_err(io_err(&txt))?;
    Ok(())
}
