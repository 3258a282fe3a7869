use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match cobrar_cli::run(cobrar_cli::Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
