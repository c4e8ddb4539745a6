//! Command-line front end for `tissuemix`: synthetic data, Boolean-network
//! profiles, model fitting, marginal densities and the serial/parallel
//! benchmark.
//!
//! Exit codes: 0 success, 2 usage, 3 numeric failure, 4 I/O or malformed
//! input, 5 serial/parallel disagreement in `bench`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use cli::{Cli, Command};
pub use error::{CliError, CliResult};

pub fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => commands::synth::run(a),
        Command::Profiles(a) => commands::profiles::run(a),
        Command::Fit(a) => commands::fit::run(a, cli.workers).map(|_| ()),
        Command::Density(a) => commands::density::run(a),
        Command::Bench(a) => commands::bench::run(a, cli.workers),
    }
}
