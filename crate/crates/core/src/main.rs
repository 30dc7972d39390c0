use clap::Parser;

use d2dvid::cli::{execute, render_error, Cli};

fn main() -> std::process::ExitCode {
    // Usage errors exit 2 via clap; runtime and validation failures exit 1.
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", render_error(&err));
            std::process::ExitCode::FAILURE
        }
    }
}
