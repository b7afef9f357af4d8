//! `allocate`: unit-cell frequencies and a tiled lattice.

use std::path::PathBuf;

use crowding::device_model::{ej_ec_ratio, LatticeLayout};
use crowding::lattice_allocation::{allocate_unit_cell, gate_frequencies, tile_lattice, AllocationRules, UnitCell};

use super::Ctx;
use crate::config;
use crate::error::CliResult;
use crate::output::{Cell, Table};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Allocation rules (TOML or JSON); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Frequency step Δ_Q within a group (MHz).
    #[arg(long)]
    pub delta_q_mhz: Option<f64>,
    /// Lowest group-A frequency (GHz).
    #[arg(long)]
    pub base_f_ghz: Option<f64>,
    /// Rows of the tiled lattice.
    #[arg(long, default_value_t = 4)]
    pub rows: usize,
    /// Columns of the tiled lattice.
    #[arg(long, default_value_t = 4)]
    pub cols: usize,
}

pub fn unit_cell_table(cell: &UnitCell) -> CliResult<Table> {
    let mut t = Table::new(&["qubit", "group", "f01_ghz", "alpha_mhz", "ec_mhz", "ej_over_ec", "area_um2"]);
    for q in &cell.qubits {
        t.push(vec![
            q.id.into(),
            format!("{:?}", q.group).into(),
            q.f01.into(),
            q.alpha.into(),
            q.e_c.into(),
            ej_ec_ratio(q)?.into(),
            q.junction_area.into(),
        ]);
    }
    Ok(t)
}

/// Per-coupler gate frequencies; works for layouts with arbitrary qubit ids.
pub fn gate_frequency_table(layout: &LatticeLayout) -> CliResult<Table> {
    let indexed = layout.with_index_ids()?;
    let mut t = Table::new(&["coupler", "qubit_a", "qubit_b", "iswap_ghz", "cz_low_ghz", "cz_high_ghz", "gates"]);
    for (orig, c) in layout.couplers.iter().zip(&indexed.couplers) {
        let gf = gate_frequencies(&indexed.qubits[c.qubit_a], &indexed.qubits[c.qubit_b]);
        let gates: Vec<String> = c.enabled_gates.iter().map(|g| g.to_string()).collect();
        t.push(vec![
            orig.id.into(),
            orig.qubit_a.into(),
            orig.qubit_b.into(),
            gf.iswap.into(),
            gf.low_cz_ghz().into(),
            gf.high_cz_ghz().into(),
            Cell::Text(gates.join(" ")),
        ]);
    }
    Ok(t)
}

pub fn run(ctx: &Ctx, args: Args) -> CliResult<()> {
    let mut out = ctx.output("allocate")?;
    if let Some(p) = &args.config {
        out.add_input(p)?;
    }
    let mut rules: AllocationRules = config::load_or_default(args.config.as_deref())?;
    if let Some(v) = args.delta_q_mhz {
        rules.delta_q_mhz = v;
    }
    if let Some(v) = args.base_f_ghz {
        rules.base_f_ghz = v;
    }
    out.set_config(&(&rules, args.rows, args.cols))?;
    let cell = allocate_unit_cell(&rules)?;
    for w in &cell.warnings {
        out.note(w.to_string());
    }
    let layout = tile_lattice(args.rows, args.cols, &cell)?;
    out.json("unit_cell.json", &cell)?;
    out.table("unit_cell_table", &unit_cell_table(&cell)?)?;
    out.json("layout.json", &layout)?;
    out.table("gate_frequencies", &gate_frequency_table(&layout)?)?;
    out.finish()?;
    let f: Vec<String> = cell.qubits.iter().map(|q| format!("{:.3}", q.f01)).collect();
    println!(
        "unit cell [{}] GHz, {}x{} lattice, {} warnings",
        f.join(", "),
        args.rows,
        args.cols,
        cell.warnings.len()
    );
    Ok(())
}
