//! Aggregation of per-run summaries into solution-rate and size tables.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::experiment::RunSummary;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub problem: String,
    /// Completed runs; failed runs are excluded from every rate.
    pub runs: usize,
    pub failed_runs: usize,
    /// Runs whose best program has zero training error.
    pub train_perfect: usize,
    /// Train-perfect runs whose simplified program passes every test case.
    pub generalized: usize,
    pub solution_rate: f64,
    pub generalization_rate: Option<f64>,
    pub min_size: Option<usize>,
    pub pre_mean: Option<f64>,
    pub post_mean: Option<f64>,
}

impl ReportRow {
    pub fn from_runs(problem: &str, runs: &[&RunSummary], failed_runs: usize) -> Self {
        let train_perfect = runs.iter().filter(|r| r.train_perfect).count();
        let solutions: Vec<&&RunSummary> = runs.iter().filter(|r| r.is_generalized_solution()).collect();
        let mean = |xs: Vec<usize>| (!xs.is_empty()).then(|| xs.iter().sum::<usize>() as f64 / xs.len() as f64);
        Self {
            problem: problem.to_owned(),
            runs: runs.len(),
            failed_runs,
            train_perfect,
            generalized: solutions.len(),
            solution_rate: if runs.is_empty() { 0.0 } else { solutions.len() as f64 / runs.len() as f64 },
            generalization_rate: (train_perfect > 0).then(|| solutions.len() as f64 / train_perfect as f64),
            min_size: solutions.iter().filter_map(|r| r.size_post).min(),
            pre_mean: mean(solutions.iter().filter_map(|r| r.size_pre).collect()),
            post_mean: mean(solutions.iter().filter_map(|r| r.size_post).collect()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    /// Groups summaries by problem, keeping the order of `problems`.
    pub fn aggregate(problems: &[String], summaries: &[RunSummary], failures: &[(String, usize)]) -> Self {
        let rows = problems
            .iter()
            .map(|p| {
                let runs: Vec<&RunSummary> = summaries.iter().filter(|s| &s.problem == p).collect();
                let failed = failures.iter().filter(|(q, _)| q == p).count();
                ReportRow::from_runs(p, &runs, failed)
            })
            .collect();
        Self { rows }
    }

    pub fn row(&self, problem: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.problem == problem)
    }

    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.failed_runs > 0)
    }

    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "problem",
            "runs",
            "failed_runs",
            "train_perfect",
            "generalized",
            "solution_rate",
            "generalization_rate",
            "min_size",
            "pre_mean",
            "post_mean",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.problem.clone(),
                r.runs.to_string(),
                r.failed_runs.to_string(),
                r.train_perfect.to_string(),
                r.generalized.to_string(),
                format!("{:.4}", r.solution_rate),
                opt(r.generalization_rate.map(|g| format!("{g:.4}"))),
                opt(r.min_size.map(|m| m.to_string())),
                opt(r.pre_mean.map(|m| format!("{m:.2}"))),
                opt(r.post_mean.map(|m| format!("{m:.2}"))),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

fn opt(s: Option<String>) -> String {
    s.unwrap_or_else(|| "-".to_owned())
}

/// Fixed-width table with the columns Problem, SolutionRate (percent),
/// GeneralizationRate (fraction), MinSize, PreMean and PostMean.
pub fn report_table(report: &Report) -> String {
    let header = ["Problem", "SolutionRate", "GeneralizationRate", "MinSize", "PreMean", "PostMean"];
    let rows: Vec<[String; 6]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.problem.clone(),
                format!("{:.0}", r.solution_rate * 100.0),
                opt(r.generalization_rate.map(|g| format!("{g:.2}"))),
                opt(r.min_size.map(|m| m.to_string())),
                opt(r.pre_mean.map(|m| format!("{m:.2}"))),
                opt(r.post_mean.map(|m| format!("{m:.2}"))),
            ]
        })
        .collect();
    render_columns(&header, &rows)
}

fn render_columns<const N: usize>(header: &[&str; N], rows: &[[String; N]]) -> String {
    let mut widths = header.map(str::len);
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        writeln!(out, "{}", parts.join("  ").trim_end()).unwrap();
    };
    line(&mut header.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

const PUBLISHED: &str = include_str!("../data/published_rates.csv");

/// One row of the published comparison table.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct PublishedRow {
    pub problem: String,
    pub cbgp: u32,
    pub pushgp: u32,
    pub g3p: u32,
    pub ge: Option<u32>,
    pub generalization: Option<f64>,
    pub min_size: Option<u32>,
    pub pre_mean: Option<f64>,
    pub post_mean: Option<f64>,
}

pub fn published_rows() -> Vec<PublishedRow> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(PUBLISHED.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .expect("bundled table parses")
}

/// Side-by-side view of measured solution rates and the bundled published
/// numbers. The published columns are reference data only.
pub fn comparison_table(report: &Report) -> String {
    let published = published_rows();
    let header = ["Problem", "Measured", "CBGP*", "PushGP*", "G3P*", "GE*"];
    let rows: Vec<[String; 6]> = report
        .rows
        .iter()
        .map(|r| {
            let p = published.iter().find(|p| p.problem == r.problem);
            let cell = |f: fn(&PublishedRow) -> Option<u32>| opt(p.and_then(f).map(|v| v.to_string()));
            [
                r.problem.clone(),
                format!("{:.0}", r.solution_rate * 100.0),
                cell(|p| Some(p.cbgp)),
                cell(|p| Some(p.pushgp)),
                cell(|p| Some(p.g3p)),
                cell(|p| p.ge),
            ]
        })
        .collect();
    let mut out = render_columns(&header, &rows);
    out.push_str("* published values, not reproduced\n");
    out
}
