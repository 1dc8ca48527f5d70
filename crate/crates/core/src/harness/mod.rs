//! Experiment driver: trials, baselines, sweeps and reports.

pub mod config;
pub mod report;
pub mod sweep;
pub mod trial;

pub use config::{ExperimentConfig, Method, SweepConfig};
pub use sweep::{run_sweep, AggregateRow, SweepKind, SweepResult};
pub use trial::{run_trial, trial_seed, Prepared, TrialOutput, TrialParams, TrialRow};
