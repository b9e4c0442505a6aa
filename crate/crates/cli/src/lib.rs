//! Command-line front end: run configurations, ensemble and trace output,
//! rate fitting and extrapolation.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;

pub use args::{Cli, Command};
pub use error::{CliError, Result};

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(a) => commands::simulate(a).map(drop),
        Command::Trace(a) => commands::trace(a).map(drop),
        Command::Rates(a) => commands::rates(a).map(drop),
        Command::Extrapolate(a) => commands::extrapolate(a).map(drop),
        Command::Invariants(a) => commands::invariants(a).map(drop),
    }
}
