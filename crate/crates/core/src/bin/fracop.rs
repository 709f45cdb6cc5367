use std::process::ExitCode;

use clap::Parser;
use fracop::oplab::cli::{run, Cli};

fn main() -> ExitCode {
    fracop::exec::init_threads_from_env();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
