//! Experiment harness for the `pdpiag` solvers: config files, single runs
//! with artifact output, certificate reports, and parameter sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod sweep;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, Format};
pub use experiment::{run_experiment, BenchError, ExitStatus, Outcome, RunOptions};
pub use sweep::{sweep, SweepReport};
