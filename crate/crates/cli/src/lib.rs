//! Command line front end: configuration, parallel drivers and file output
//! for the experiments in `frechet-core`.

pub mod commands;
pub mod config;
pub mod driver;
pub mod error;
pub mod output;

pub use commands::Outcome;
pub use config::{Cli, Command, RunConfig};
pub use error::{CliError, CliResult};

/// Resolves the configuration and runs the selected command.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let cfg = RunConfig::from_cli(cli)?;
    commands::execute(&cfg)
}
