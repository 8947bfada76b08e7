//! `stbem`: uniform studies, adaptive runs and exports for the space-time
//! boundary element solver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use config::Settings;

#[derive(Debug, Parser)]
#[command(name = "stbem", version, about = "Space-time adaptive boundary elements for the 2D wave equation")]
struct Cli {
    /// `key = value` file with default settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Uniform refinement study through the time-marching solver.
    Uniform(Settings),
    /// Adaptive SOLVE, ESTIMATE, MARK, REFINE loop.
    Adapt(Settings),
    /// Assemble one system and dump its entries.
    EntryDump(Settings),
    /// Write a (possibly refined) uniform mesh.
    MeshExport(Settings),
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let (name, flags) = match &cli.command {
        Some(Command::Uniform(s)) => ("uniform", s.clone()),
        Some(Command::Adapt(s)) => ("adapt", s.clone()),
        Some(Command::EntryDump(s)) => ("entry-dump", s.clone()),
        Some(Command::MeshExport(s)) => ("mesh-export", s.clone()),
        None => match file.command.clone() {
            Some(c) => (
                match c.as_str() {
                    "uniform" => "uniform",
                    "adapt" => "adapt",
                    "entry-dump" => "entry-dump",
                    "mesh-export" => "mesh-export",
                    other => bail!("unknown command {other:?} in config file"),
                },
                Settings::default(),
            ),
            None => bail!("no command given; see --help"),
        },
    };
    let settings = file.overlay(&flags);
    if let Some(n) = settings.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match name {
        "uniform" => commands::uniform(&settings),
        "adapt" => commands::adapt(&settings),
        "entry-dump" => commands::entry_dump(&settings),
        _ => commands::mesh_export(&settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
