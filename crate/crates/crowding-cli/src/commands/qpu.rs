//! `qpu-mc`: collision Monte Carlo on a tiled or loaded lattice.

use std::fs;
use std::path::PathBuf;

use crowding::collision_bounds::ScanConfig;
use crowding::device_model::{validate_layout, LatticeLayout};
use crowding::lattice_allocation::{allocate_unit_cell, tile_lattice, AllocationRules};
use crowding::qpu_mc::{run_study, simulate, CollisionReport, QpuMcConfig, StudyAxis, StudyPoint};
use serde::{Deserialize, Serialize};

use super::tls::{histogram, write_histogram_svg};
use super::Ctx;
use crate::cache;
use crate::config;
use crate::error::{CliError, CliResult};
use crate::output::Table;
use crate::svg::{Plot, Series};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// TOML or JSON config (see SCHEMAS.md); defaults apply when omitted.
    pub config: Option<PathBuf>,
    /// Ignore and do not update the bound-table cache.
    #[arg(long)]
    pub no_cache: bool,
}

/// Optional one-parameter study.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpuSweep {
    pub axis: StudyAxis,
    pub values: Vec<f64>,
}

/// `qpu-mc` configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct QpuConfig {
    pub rows: usize,
    pub cols: usize,
    /// Layout JSON to use instead of tiling the allocated unit cell.
    pub layout: Option<PathBuf>,
    pub allocation: AllocationRules,
    pub scan: ScanConfig,
    #[serde(flatten)]
    pub mc: QpuMcConfig,
    pub sweep: Option<QpuSweep>,
}

impl Default for QpuConfig {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            layout: None,
            allocation: AllocationRules::default(),
            scan: ScanConfig::default(),
            mc: QpuMcConfig::default(),
            sweep: None,
        }
    }
}

fn load_layout(path: &std::path::Path) -> CliResult<LatticeLayout> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let layout: LatticeLayout =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let violations = validate_layout(&layout);
    if !violations.is_empty() {
        let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::Input(format!("{}: {}", path.display(), msgs.join("; "))));
    }
    Ok(layout)
}

fn breakdown_table(report: &CollisionReport) -> Table {
    let mut t = Table::new(&["case", "collisions", "per_trial"]);
    let n = report.per_trial.len().max(1) as f64;
    for (k, v) in &report.breakdown {
        t.push(vec![k.as_str().into(), (*v).into(), (*v as f64 / n).into()]);
    }
    t
}

pub fn run(ctx: &Ctx, args: Args) -> CliResult<()> {
    let mut out = ctx.output("qpu-mc")?;
    if let Some(p) = &args.config {
        out.add_input(p)?;
    }
    let mut cfg: QpuConfig = config::load_or_default(args.config.as_deref())?;
    cfg.mc.seed = ctx.seed_or(cfg.mc.seed);
    cfg.mc.validate()?;
    cfg.scan.validate()?;
    out.set_seed(cfg.mc.seed);
    out.set_config(&cfg)?;

    let cell = allocate_unit_cell(&cfg.allocation)?;
    let layout = match &cfg.layout {
        Some(p) => {
            let p = match &args.config {
                Some(c) if p.is_relative() => c.parent().map(|d| d.join(p)).unwrap_or_else(|| p.clone()),
                _ => p.clone(),
            };
            out.add_input(&p)?;
            load_layout(&p)?
        }
        None => tile_lattice(cfg.rows, cfg.cols, &cell)?,
    };
    let (table, _) = cache::load_or_build(&cfg.scan, !args.no_cache, &mut out)?;

    let report = simulate(&layout, &table, &cfg.mc)?;
    out.table("collision_histogram", &histogram(&report.per_trial))?;
    out.table("collision_breakdown", &breakdown_table(&report))?;
    write_histogram_svg(&mut out, "collisions.svg", "Frequency collisions per processor", &report.per_trial)?;

    let mut study: Option<Vec<StudyPoint>> = None;
    if let Some(sw) = &cfg.sweep {
        let points = if cfg.layout.is_some() {
            if sw.axis == StudyAxis::NQubits {
                return Err(CliError::Input("an n_qubits sweep needs a tiled lattice, not a fixed layout".into()));
            }
            sw.values
                .iter()
                .map(|&v| {
                    let mut c = cfg.mc;
                    match sw.axis {
                        StudyAxis::SigmaF => c.sigma_f_mhz = v,
                        StudyAxis::XAc => c.x_ac = v,
                        StudyAxis::FThreshold => c.f_threshold = v,
                        StudyAxis::NQubits => unreachable!(),
                    }
                    Ok(StudyPoint {
                        axis_value: v,
                        rows: layout.rows,
                        cols: layout.cols,
                        report: simulate(&layout, &table, &c)?,
                    })
                })
                .collect::<crowding::Result<Vec<_>>>()?
        } else {
            run_study(&cell, cfg.rows, cfg.cols, &cfg.mc, &table, sw.axis, &sw.values)?
        };
        let mut t = Table::new(&[
            "axis_value",
            "rows",
            "cols",
            "mean_collisions",
            "stdev",
            "ci_low",
            "ci_high",
            "yield",
        ]);
        for p in &points {
            t.push(vec![
                p.axis_value.into(),
                p.rows.into(),
                p.cols.into(),
                p.report.stats.mean.into(),
                p.report.stats.stdev.into(),
                p.report.stats.ci_low.into(),
                p.report.stats.ci_high.into(),
                p.report.yield_fraction.into(),
            ]);
        }
        out.table("sweep", &t)?;
        let axis = serde_json::to_value(sw.axis).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        out.text(
            "sweep.svg",
            &Plot::new(format!("Collisions versus {axis}"), axis.clone(), "mean collisions")
                .with(Series::line(
                    "mean",
                    points.iter().map(|p| (p.axis_value, p.report.stats.mean)).collect(),
                ))
                .with(Series::line(
                    "95% CI low",
                    points.iter().map(|p| (p.axis_value, p.report.stats.ci_low)).collect(),
                ))
                .with(Series::line(
                    "95% CI high",
                    points.iter().map(|p| (p.axis_value, p.report.stats.ci_high)).collect(),
                ))
                .render(),
        )?;
        study = Some(points);
    }

    out.json(
        "qpu_mc.json",
        &serde_json::json!({
            "config": cfg,
            "bound_table_hash": table.config_hash,
            "rows": layout.rows,
            "cols": layout.cols,
            "n_checks": report.n_checks,
            "stats": report.stats,
            "yield": report.yield_fraction,
            "breakdown": report.breakdown,
            "sweep": study.as_ref().map(|s| s.iter().map(|p| serde_json::json!({
                "axis_value": p.axis_value,
                "rows": p.rows,
                "cols": p.cols,
                "stats": p.report.stats,
                "yield": p.report.yield_fraction,
                "breakdown": p.report.breakdown,
            })).collect::<Vec<_>>()),
        }),
    )?;
    out.finish()?;
    println!(
        "{}x{} lattice: mean {:.3} collisions (95% CI {:.3}..{:.3}), yield {:.4}",
        layout.rows, layout.cols, report.stats.mean, report.stats.ci_low, report.stats.ci_high, report.yield_fraction
    );
    Ok(())
}
