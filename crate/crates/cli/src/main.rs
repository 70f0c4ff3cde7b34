use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use fewbody::{execute, Cli, ExitKind};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(outcome) => {
            let mut out = std::io::stdout().lock();
            for line in &outcome.lines {
                // a closed pipe (e.g. `| head`) is not a failure
                if writeln!(out, "{line}").is_err() {
                    break;
                }
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: verification failed");
                ExitCode::from(ExitKind::Verification.code() as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
