//! Batch front-end for the `ddqmc` solver: JSON run configs, simulation
//! campaigns and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_exact, cmd_extrapolate, cmd_run, cmd_susceptibility, cmd_sweep, simulate, RunSummary};
pub use config::RunConfig;
pub use error::CliError;
