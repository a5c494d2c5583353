//! Experiment runner for quenches of the current-coupled Ising ring: TOML
//! configuration, single runs, parameter sweeps, CSV time series and run
//! manifests. The numerics live in [`dqpt_core`].

pub mod config;
mod error;
pub mod output;
pub mod run;
pub mod sweep;
pub mod validate;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use run::{run_quench, simulate, RunManifest, RunOutput};
pub use sweep::run_sweep;
