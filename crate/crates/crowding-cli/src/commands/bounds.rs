//! `bounds`: collision bound tables and single fidelity curves.

use clap::ValueEnum;
use crowding::collision_bounds::{
    fidelity_curve, g_fractions, CrossingRule, ScanConfig, REPORT_TABLES, THRESHOLDS,
};
use crowding::gate_dynamics::{case_by_name, catalog, CaseEvaluator, PropagationMethod};

use super::Ctx;
use crate::cache::{self, Source};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Output, Table};
use crate::svg::{Plot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    First,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Frame,
    Rk4,
}

#[derive(Debug, clap::Args)]
pub struct ScanArgs {
    /// Detuning grid step (MHz).
    #[arg(long, default_value_t = 1.0)]
    pub grid_step_mhz: f64,
    /// Largest detuning scanned (GHz).
    #[arg(long, default_value_t = 2.5)]
    pub delta_max_ghz: f64,
    /// Crossing rule applied to oscillating fidelity curves.
    #[arg(long, value_enum, default_value_t = Rule::First)]
    pub rule: Rule,
    /// Propagator used for the gate dynamics.
    #[arg(long, value_enum, default_value_t = Method::Frame)]
    pub method: Method,
    /// Absolute tolerance of the RK4 propagator.
    #[arg(long, default_value_t = 1e-10)]
    pub rk4_tolerance: f64,
}

impl ScanArgs {
    pub fn config(&self) -> ScanConfig {
        ScanConfig {
            grid_step_mhz: self.grid_step_mhz,
            delta_max_ghz: self.delta_max_ghz,
            rule: match self.rule {
                Rule::First => CrossingRule::First,
                Rule::Last => CrossingRule::Last,
            },
            method: match self.method {
                Method::Frame => PropagationMethod::Frame,
                Method::Rk4 => PropagationMethod::Rk4 {
                    tolerance: self.rk4_tolerance,
                },
            },
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Ignore and do not update the on-disk cache.
    #[arg(long)]
    pub no_cache: bool,
    /// Also write the F(Δ) curve of this collision case.
    #[arg(long)]
    pub curve: Option<String>,
    /// Coupling fraction of the curve, in units of the worst-case coupling.
    #[arg(long, default_value_t = 1.0)]
    pub g_fraction: f64,
}

fn threshold_columns() -> Vec<String> {
    std::iter::once("g_fraction".to_string())
        .chain(THRESHOLDS.iter().map(|t| format!("delta_min_ghz_f{t}")))
        .collect()
}

/// Writes one table per report layout plus the long-form table.
pub fn write_tables(out: &mut Output, table: &crowding::collision_bounds::BoundTable) -> CliResult<()> {
    let cols = threshold_columns();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut plot = Plot::new("Minimum detuning for F > 0.999", "g / g_wcs", "Δ_min (GHz)");
    for rt in REPORT_TABLES.iter() {
        let mut t = Table::new(&cols);
        for g in g_fractions() {
            let mut row: Vec<Cell> = vec![g.into()];
            for thr in THRESHOLDS {
                row.push(rt.value(table, g, thr)?.into());
            }
            t.push(row);
        }
        out.table(&format!("table_{}", rt.name), &t)?;
        let pts = g_fractions()
            .iter()
            .map(|&g| rt.value(table, g, 0.999).map(|v| (g, v)))
            .collect::<crowding::Result<Vec<_>>>()?;
        plot = plot.with(Series::line(rt.name, pts));
    }
    let mut long = Table::new(&["case", "g_fraction", "threshold", "delta_min_ghz"]);
    for e in &table.entries {
        long.push(vec![
            e.case.as_str().into(),
            e.g_fraction.into(),
            e.threshold.into(),
            e.delta_min_ghz.into(),
        ]);
    }
    out.table("bounds_long", &long)?;
    out.json("bounds.json", table)?;
    out.text("bounds_f0.999.svg", &plot.render())?;
    Ok(())
}

pub fn run(ctx: &Ctx, args: Args) -> CliResult<()> {
    let cfg = args.scan.config();
    cfg.validate()?;
    let mut out = ctx.output("bounds")?;
    out.set_config(&cfg)?;
    if let Some(name) = &args.curve {
        if !(args.g_fraction >= 0.0) {
            return Err(CliError::Input("--g-fraction must be non-negative".into()));
        }
        let case = case_by_name(name).map_err(|_| {
            let names: Vec<String> = catalog().into_iter().map(|c| c.name).collect();
            CliError::Input(format!("unknown collision case `{name}`; known cases: {}", names.join(", ")))
        })?;
        let eval = CaseEvaluator::new(case, cfg.method)?;
        let curve = fidelity_curve(&eval, args.g_fraction, &cfg)?;
        let mut t = Table::new(&["delta_ghz", "fidelity"]);
        let mut pts = Vec::with_capacity(curve.len());
        for (i, f) in curve.iter().enumerate() {
            t.push(vec![cfg.delta_at(i).into(), (*f).into()]);
            pts.push((cfg.delta_at(i), *f));
        }
        out.table("fidelity_curve", &t)?;
        out.text(
            "fidelity_curve.svg",
            &Plot::new(
                format!("{name} at g = {} g_wcs", args.g_fraction),
                "detuning Δ (GHz)",
                "average gate fidelity",
            )
            .with(Series::line("F(Δ)", pts))
            .render(),
        )?;
    }
    let (table, source) = cache::load_or_build(&cfg, !args.no_cache, &mut out)?;
    write_tables(&mut out, &table)?;
    out.finish()?;
    println!(
        "{} bounds {} ({} report tables)",
        table.entries.len(),
        match source {
            Source::Cache => "loaded from cache",
            Source::Built => "computed",
        },
        REPORT_TABLES.len()
    );
    Ok(())
}
