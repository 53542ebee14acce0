//! The `igame` workbench: command-line orchestration of the analysis stages.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod rundir;

use std::fs;

use cli::{Cli, Command};
use error::{CliError, CliResult};
use report::RunReport;

/// Reads the `--config` file, if any.
fn config_text(cmd: &Command) -> CliResult<Option<String>> {
    match &cmd.common().config {
        None => Ok(None),
        Some(p) => fs::read_to_string(p)
            .map(Some)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display()))),
    }
}

pub fn run(cli: &Cli) -> CliResult<RunReport> {
    let text = config_text(&cli.command)?;
    let text = text.as_deref();
    match &cli.command {
        Command::Simulate { common, scenario } => commands::simulate::run(common, text, scenario.clone()),
        Command::Detect {
            common,
            trajectory,
            menu,
            threshold,
        } => commands::detect::run(common, text, trajectory.clone(), menu.clone(), *threshold),
        Command::Unravel { common, epsilon, depth } => {
            commands::unravel::run(common, text, epsilon.clone(), *depth)
        }
        Command::Sdcheck { common } => commands::sdcheck::run(common, text),
        Command::Verbalize { common, penalty } => commands::verbalize::run(common, text, *penalty),
        Command::Quantize { common, cutoff } => commands::quantize::run(common, text, *cutoff),
    }
}
