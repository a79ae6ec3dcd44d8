use std::process::ExitCode;

use clap::Parser;
use transit_sls::cli::{error_record, run, RunConfig};

fn main() -> ExitCode {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                // --help / --version
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            eprintln!("status = error");
            eprintln!("kind = usage");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            let record = error_record(Some(config.command), &err);
            eprintln!("error: {err}");
            eprint!("{record}");
            let _ = std::fs::create_dir_all(&config.out)
                .and_then(|_| std::fs::write(config.out.join("error.kv"), record.to_string()));
            ExitCode::from(2)
        }
    }
}
