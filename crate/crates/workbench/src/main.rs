use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;

use igame::cli::Cli;

fn log_level() -> Result<LevelFilter, String> {
    match std::env::var("IGAME_LOG").as_deref() {
        Err(_) | Ok("info") => Ok(LevelFilter::Info),
        Ok("quiet") => Ok(LevelFilter::Error),
        Ok("debug") => Ok(LevelFilter::Debug),
        Ok(other) => Err(format!("IGAME_LOG must be quiet, info or debug, got `{other}`")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match log_level() {
        Ok(l) => l,
        Err(msg) => {
            eprintln!("igame: {msg}");
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    match igame::run(&cli) {
        Ok(report) => {
            log::info!(
                "{} finished; {} artifacts in {}",
                report.command,
                report.artifacts.len(),
                cli.command.common().out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
