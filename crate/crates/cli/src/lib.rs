//! Command-line front end for `nml-pca`: rank selection, scree export,
//! prefix-length comparisons and synthetic data generation.

pub mod commands;
pub mod report;

pub use commands::{run, Cli, CliError, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};
pub use report::RunReport;
