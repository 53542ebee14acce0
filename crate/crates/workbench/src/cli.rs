use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "igame", version, about = "Workbench for detecting and unraveling interactive games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Args)]
pub struct Common {
    /// Run directory; inputs are read from and artifacts written to it.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    /// Seed for every random draw of the command.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON config for the command; unknown keys are rejected.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write `<command>.timings.json` with wall-clock stage timings.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Generate a scenario fixture: trajectory, ground truth and candidate menu.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Builtin scenario name or path to a scenario JSON.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Autonomous fit, hidden-input verdict and candidate ranking.
    Detect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trajectory: Option<String>,
        #[arg(long)]
        menu: Option<String>,
        /// Fixed residual threshold instead of the calibrated one.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Recover ε, extract desires, fit the desire map and unravel recursively.
    Unravel {
        #[command(flatten)]
        common: Common,
        /// ε series to use instead of recovering it.
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Build the desire picture and check it against the subject picture.
    Sdcheck {
        #[command(flatten)]
        common: Common,
    },
    /// Segment the history, compute words in both pictures and compare them.
    Verbalize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        penalty: Option<f64>,
    },
    /// Quantize desires on a truncated Fock space and evolve in slow time.
    Quantize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cutoff: Option<u32>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Detect { .. } => "detect",
            Command::Unravel { .. } => "unravel",
            Command::Sdcheck { .. } => "sdcheck",
            Command::Verbalize { .. } => "verbalize",
            Command::Quantize { .. } => "quantize",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Detect { common, .. }
            | Command::Unravel { common, .. }
            | Command::Sdcheck { common }
            | Command::Verbalize { common, .. }
            | Command::Quantize { common, .. } => common,
        }
    }
}
