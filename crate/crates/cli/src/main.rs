use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;

use propfit_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    // logging is configured from flags only, never from the environment
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    match run(&cli) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("propfit {}: error: {e:#}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
