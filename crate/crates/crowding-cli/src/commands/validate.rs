//! `validate`: schema and invariant checks on inputs without running them.

use std::path::PathBuf;

use clap::ValueEnum;
use crowding::device_model::{validate_layout, LatticeLayout};
use crowding::lattice_allocation::AllocationRules;

use super::qpu::QpuConfig;
use super::tls::{McConfig, SimConfig};
use super::Ctx;
use crate::config;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Lattice layout JSON.
    Layout,
    /// Allocation rules.
    Allocate,
    /// `tls-sim` config.
    TlsSim,
    /// `tls-mc` config.
    TlsMc,
    /// `qpu-mc` config.
    QpuMc,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// File to check.
    pub path: PathBuf,
    /// What the file is.
    #[arg(long, value_enum, default_value_t = Kind::Layout)]
    pub kind: Kind,
}

pub fn run(_ctx: &Ctx, args: Args) -> CliResult<()> {
    let p = &args.path;
    match args.kind {
        Kind::Layout => {
            let layout: LatticeLayout = config::load(p)?;
            let v = validate_layout(&layout);
            if !v.is_empty() {
                for x in &v {
                    println!("violation: {x}");
                }
                return Err(CliError::Input(format!("{}: {} layout violations", p.display(), v.len())));
            }
            println!(
                "{}: valid {}x{} layout with {} couplers",
                p.display(),
                layout.rows,
                layout.cols,
                layout.couplers.len()
            );
        }
        Kind::Allocate => {
            let r: AllocationRules = config::load(p)?;
            r.validate()?;
            println!("{}: valid allocation rules", p.display());
        }
        Kind::TlsSim => {
            let c: SimConfig = config::load(p)?;
            c.validate()?;
            println!("{}: valid tls-sim config ({} TLSs)", p.display(), c.tls.len());
        }
        Kind::TlsMc => {
            let c: McConfig = config::load(p)?;
            c.mc.validate()?;
            println!("{}: valid tls-mc config", p.display());
        }
        Kind::QpuMc => {
            let c: QpuConfig = config::load(p)?;
            c.mc.validate()?;
            c.scan.validate()?;
            println!("{}: valid qpu-mc config", p.display());
        }
    }
    Ok(())
}
