//! `mfdepth`: batch front end for warping, cost volumes, dynamic masks,
//! evaluation and the synthetic dynamic-scene demo.

mod commands;
mod failure;
mod load;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::failure::{CmdResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "mfdepth", version, about = "Multi-frame depth supervision toolkit")]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Globals {
    /// Camera intrinsics JSON: {"fx", "fy", "cx", "cy"}.
    #[arg(long, global = true)]
    pub intrinsics: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Threads used when a command processes several frames.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reconstruct the target from a source view and report photometric error.
    Warp(commands::warp::WarpArgs),
    /// Build a plane-sweep cost volume, depth hints and consistency mask.
    Costvol(commands::costvol::CostvolArgs),
    /// Depth-inconsistency masks from an over-fit and a reference depth.
    Mask(commands::mask::MaskArgs),
    /// Evaluate predicted depth against ground truth.
    Eval(commands::eval::EvalArgs),
    /// Render a dynamic scene and run the mask and loss pipeline end to end.
    DemoDynamic(commands::demo::DemoArgs),
}

fn run(cli: &Cli) -> CmdResult {
    if cli.globals.workers == 0 {
        return Err(Failure::bad("--workers must be at least 1"));
    }
    let g = &cli.globals;
    match &cli.command {
        Command::Warp(a) => commands::warp::run(g, a),
        Command::Costvol(a) => commands::costvol::run(g, a),
        Command::Mask(a) => commands::mask::run(g, a),
        Command::Eval(a) => commands::eval::run(g, a),
        Command::DemoDynamic(a) => commands::demo::run(g, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mfdepth: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
