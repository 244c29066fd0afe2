//! `stipula`: parse, check, run, explore, compare and analyse contracts.

mod commands;
mod repl;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const OK: u8 = 0;
pub const FAILED: u8 = 1;
pub const USAGE: u8 = 2;
pub const INCONCLUSIVE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "stipula", version, about = "Toolchain for Stipula legal contracts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Reserved; runs are always deterministic.
    #[arg(long, global = true, hide = true)]
    pub seedless: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a contract and print it in canonical form.
    Parse {
        contract: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the static checks.
    Check {
        contract: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario and print its trace as JSON Lines.
    Run {
        contract: PathBuf,
        scenario: PathBuf,
        /// Environment supplying party identities.
        #[arg(long)]
        env: Option<PathBuf>,
        /// End the trace with a line holding the final configuration.
        #[arg(long = "final")]
        show_final: bool,
    },
    /// Step through a contract interactively.
    Repl {
        contract: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        /// Write the accepted commands as a scenario file on exit.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Explore every run over the environment's domains.
    Explore {
        contract: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        json: bool,
    },
    /// Decide normative equivalence of two contracts.
    Equiv {
        left: PathBuf,
        right: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        #[arg(long)]
        json: bool,
        /// Write the distinguishing witness as JSON Lines.
        #[arg(long)]
        witness_json: Option<PathBuf>,
    },
    /// Check asset safety, liquidity and dead ends.
    Analyze {
        contract: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        #[arg(long, value_enum, default_value = "all")]
        property: PropertyArg,
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
pub struct Bounds {
    /// Environment: parties, value domains and default bounds.
    #[arg(long)]
    pub env: PathBuf,
    /// Last clock value explored; overrides the environment.
    #[arg(long)]
    pub horizon: Option<i64>,
    /// Maximum number of configurations; overrides the environment.
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PropertyArg {
    All,
    AssetSafety,
    Liquidity,
    DeadEnds,
}

/// Why a command stopped, and the exit code that says so.
#[derive(Debug)]
pub struct Exit {
    pub code: u8,
    pub message: String,
}

impl Exit {
    pub fn usage(message: impl Into<String>) -> Exit {
        Exit {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn failed(message: impl Into<String>) -> Exit {
        Exit {
            code: FAILED,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.seedless {
        eprintln!("error: --seedless is reserved; runs never use randomness");
        return ExitCode::from(USAGE);
    }
    match commands::dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(exit) => {
            if !exit.message.is_empty() {
                eprintln!("{}", exit.message);
            }
            ExitCode::from(exit.code)
        }
    }
}
