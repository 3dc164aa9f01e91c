use std::process::ExitCode;

use clap::Parser;
use resadapt_cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("resadapt: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
