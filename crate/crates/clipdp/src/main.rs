//! Thin command-line front end: `clipdp run ...` trains an experiment and
//! writes CSV learning curves; `clipdp gradcheck ...` verifies every
//! analytic derivative against central differences.

use std::process::ExitCode;

use clipdp::config::{parse_cli, Command};
use clipdp::error::Error;
use clipdp::runner::{run_experiment, run_gradcheck};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let command = match parse_cli(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match command {
        Command::Run(cfg) => run_experiment(&cfg).map(|()| true),
        Command::Gradcheck(opts) => run_gradcheck(&opts),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
