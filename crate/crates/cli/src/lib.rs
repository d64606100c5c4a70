//! Experiment runner for the `sociallearn` library: configuration files,
//! scenario resolution, assumption checks, batch runs and strategy
//! comparisons.

pub mod assumptions;
pub mod config;
pub mod error;
pub mod experiment;
pub mod scenario;

pub use assumptions::{check_assumptions, AssumptionReport, CheckStatus};
pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, Result};
pub use experiment::{compare_strategies, run_experiment, AnalysisReport, CompareReport, Outcome};
pub use scenario::{Canned, Scenario};
