//! Experiment harness and command-line interface for heuristic parameter
//! choice: configuration, noise generation, error metrics and the sweep over
//! noise levels that produces CSV and JSON reports.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod noise;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, write_report, ExperimentReport, ReportRow};
