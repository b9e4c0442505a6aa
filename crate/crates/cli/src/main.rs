use std::process::ExitCode;

use clap::Parser;
use springy_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("springy: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
