use std::process::ExitCode;

use clap::Parser;
use drinfeld::cli::{exit_code, run, Cli, RunConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = RunConfig::resolve(&cli.config).and_then(|config| run(&cli.command, &config));
    match outcome {
        Ok(report) => {
            println!("{}", report.to_json());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
