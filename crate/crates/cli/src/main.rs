use std::process::ExitCode;

use clap::Parser;
use meshplan_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MESHPLAN_LOG", "warn")).init();
    run(Cli::parse())
}
