//! Experiment orchestration for cbgp: configuration, batches of seeded
//! runs, JSONL persistence and solution-rate reports.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{ConfigError, ExperimentConfig};
pub use experiment::{run_experiment, ExperimentOutcome, HarnessError, LogRecord, RunSummary};
pub use report::{report_table, Report, ReportRow};
