use std::io;
use std::process::ExitCode;

use clap::Parser;
use stacksim_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match stacksim_cli::execute(&cli, &mut io::stdout().lock(), &mut io::stderr().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
