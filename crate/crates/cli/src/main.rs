use clap::Parser;
use secreg_cli::{dispatch, RunConfig};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    match dispatch(&cfg) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
