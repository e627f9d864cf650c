//! Multi-seed experiment runner, flat configuration and CSV/JSON reports.

pub mod config;
pub mod report;
pub mod runner;
pub mod stats;

pub use config::{ExperimentConfig, ExperimentKind};
pub use report::{render_table, summary_json, write_outputs, write_summary_csv, SUMMARY_SCHEMA};
pub use runner::{run_experiment, theory_diagnostics, Diagnostic, ExperimentOutput, Trace, TraceLine, TrialRecord};
pub use stats::{improvement_ratio, mean, sample_stddev, summarize, TrialStats};
