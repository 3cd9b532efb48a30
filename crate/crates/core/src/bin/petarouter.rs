//! Command-line front end. Exit codes: 0 success, 1 invariant violation,
//! 2 usage or input error.

use std::process::ExitCode;

use clap::Parser;
use petarouter::io::{emit_report, exit_code, report_to_string, run_experiment, ExperimentSpec};

#[derive(Parser)]
#[command(name = "petarouter", version, about = "Split-parallel switch and HBM switch simulator")]
struct Cli {
    #[command(subcommand)]
    spec: ExperimentSpec,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run_experiment(&cli.spec).and_then(|o| {
        match &cli.spec.common().report {
            Some(p) => emit_report(&o.report, p)?,
            None => print!("{}", report_to_string(&o.report)?),
        }
        Ok(o.exit_code)
    });
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error [{}]: {e}", e.module());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
