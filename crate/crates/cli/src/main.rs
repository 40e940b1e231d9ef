use std::io;
use std::process::ExitCode;

use adamuon_cli::{execute, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(execute(
        cli,
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    ))
}
