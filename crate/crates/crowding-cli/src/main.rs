//! `crowding`: batch front end for junction statistics, TLS analysis,
//! collision bounds, frequency allocation and processor-yield Monte Carlo.

mod cache;
mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "crowding", version, about = "Frequency-crowding analysis for fixed-frequency transmon processors")]
struct Cli {
    /// Master seed; overrides the seed of any config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory receiving every artifact and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Encoding of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit resistance and variability models to room-temperature junction data.
    JunctionFit(commands::junction::Args),
    /// Detect and fit TLS Lorentzians in a swap-spectroscopy or Γ1(f) trace.
    TlsFit(commands::tls::FitArgs),
    /// Synthesize a Γ1(f) trace from a list of TLSs.
    TlsSim(commands::tls::SimArgs),
    /// Monte Carlo of qubits disabled by junction TLSs.
    TlsMc(commands::tls::McArgs),
    /// Build (or load from cache) the collision bound tables.
    Bounds(commands::bounds::Args),
    /// Allocate unit-cell frequencies and tile a lattice.
    Allocate(commands::allocate::Args),
    /// Monte Carlo of frequency collisions on a processor lattice.
    QpuMc(commands::qpu::Args),
    /// Check a layout or config file without running anything.
    Validate(commands::validate::Args),
}

fn run(cli: Cli) -> error::CliResult<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(error::CliError::Input("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| error::CliError::Input(e.to_string()))?;
    }
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir,
        format: cli.format,
    };
    match cli.command {
        Command::JunctionFit(a) => commands::junction::run(&ctx, a),
        Command::TlsFit(a) => commands::tls::fit(&ctx, a),
        Command::TlsSim(a) => commands::tls::sim(&ctx, a),
        Command::TlsMc(a) => commands::tls::mc(&ctx, a),
        Command::Bounds(a) => commands::bounds::run(&ctx, a),
        Command::Allocate(a) => commands::allocate::run(&ctx, a),
        Command::QpuMc(a) => commands::qpu::run(&ctx, a),
        Command::Validate(a) => commands::validate::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
