use std::process::ExitCode;

use clap::Parser;
use uavcell::cli::{run, Cli};

fn main() -> ExitCode {
    let code = run(Cli::parse());
    ExitCode::from(code as u8)
}
