//! Experiment harness for [`tvtrack_core`]: configuration files, seeded Monte
//! Carlo sweeps, CSV/JSON output and the `tvtrack` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod output;
pub mod selftest;

pub use config::{ConfigError, ExperimentConfig};
pub use experiment::{run_sweep, run_trial, SweepResult, TrialRecord};
