//! Experiment harness for `rdme-core`: configuration and model files,
//! experiment drivers and result bundles.

pub mod config;
pub mod error;
pub mod experiments;
pub mod model_file;
pub mod output;

use std::path::PathBuf;

pub use config::{load_config, ExperimentConfig, Overrides};
pub use error::{CliError, EXIT_UNRELIABLE};

/// Runs an experiment and writes its bundle. Returns the written files and
/// whether the result was flagged unreliable.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<(Vec<PathBuf>, bool), CliError> {
    let bundle = experiments::run(cfg)?;
    let files = output::write_outputs(&bundle, &cfg.output)?;
    Ok((files, bundle.unreliable))
}
