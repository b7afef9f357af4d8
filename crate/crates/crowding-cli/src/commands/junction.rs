//! `junction-fit`: resistance model, variability model, σ_f01 and aging.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crowding::device_model::PhysicalConstants;
use crowding::junction_stats::{
    aging_deltas, chip_window_cv, coefficient_of_variation, fit_cv_model, fit_resistance_model, frequency_stdev,
    split_open_circuits, transmon_frequency, JunctionSample, WaferMap, DEFAULT_OPEN_CIRCUIT_OHM,
};
use serde::Serialize;

use super::Ctx;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};
use crate::svg::{Plot, Series};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Junction CSV: die_row,die_col,width_um,r_n_ohm,day.
    pub csv: PathBuf,
    /// Resistances above this value are treated as open circuits (Ω).
    #[arg(long, default_value_t = DEFAULT_OPEN_CIRCUIT_OHM)]
    pub open_threshold_ohm: f64,
    /// Side length of the die window used for chip-scale CVs.
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    /// Charging energy used to convert resistance to frequency (MHz).
    #[arg(long, default_value_t = 200.0)]
    pub ec_mhz: f64,
    /// Superconducting gap (µeV).
    #[arg(long, default_value_t = crowding::device_model::ALUMINUM_GAP_UEV)]
    pub gap_uev: f64,
    /// Wafer label recorded in the report (default: file stem).
    #[arg(long)]
    pub label: Option<String>,
}

/// Reads the junction CSV, reporting the line of any malformed row.
pub fn read_samples(path: &Path) -> CliResult<Vec<JunctionSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for rec in rdr.deserialize::<JunctionSample>() {
        let s = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Input(format!("{}: line {line}: {e}", path.display()))
        })?;
        out.push(s);
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{}: no junction rows", path.display())));
    }
    Ok(out)
}

#[derive(Serialize)]
struct Report<'a> {
    wafer_label: &'a str,
    n_samples: usize,
    n_kept: usize,
    open_threshold_ohm: f64,
    open_circuits: &'a [JunctionSample],
    reference_day: i32,
    resistance_model: crowding::junction_stats::ResistanceModel,
    cv_model: crowding::junction_stats::CvModel,
    ec_mhz: f64,
    gap_uev: f64,
    aging: &'a crowding::junction_stats::AgingReport,
}

pub fn run(ctx: &Ctx, args: Args) -> CliResult<()> {
    let mut out = ctx.output("junction-fit")?;
    out.add_input(&args.csv)?;
    out.set_config(&(
        args.open_threshold_ohm,
        args.window,
        args.ec_mhz,
        args.gap_uev,
    ))?;
    let consts = PhysicalConstants::with_gap(args.gap_uev)?;
    let samples = read_samples(&args.csv)?;
    let label = args.label.clone().unwrap_or_else(|| {
        args.csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    });
    let (kept, open) = split_open_circuits(&samples, args.open_threshold_ohm);
    for o in &open {
        out.note(format!(
            "excluded open circuit at die ({},{}), width {} µm, day {}: {} Ω",
            o.die_row, o.die_col, o.width_um, o.day, o.r_n_ohm
        ));
    }
    if kept.is_empty() {
        return Err(CliError::Input("no junctions left after removing open circuits".into()));
    }
    let wafer = WaferMap::new(kept.clone(), label.clone());
    let ref_day = *wafer.days().first().expect("non-empty wafer");
    let ref_samples: Vec<JunctionSample> = kept.iter().copied().filter(|s| s.day == ref_day).collect();
    let model = fit_resistance_model(&ref_samples)?;

    let mut by_width: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for s in &ref_samples {
        by_width
            .entry(s.width_um.to_bits())
            .or_insert_with(|| (s.width_um, vec![]))
            .1
            .push(s.r_n_ohm);
    }
    let mut rw = Table::new(&["width_um", "area_um2", "n", "mean_r_n_ohm", "model_r_n_ohm", "cv_r_n"]);
    let mut cv_obs = Vec::new();
    for (w, rs) in by_width.values() {
        let mean = rs.iter().sum::<f64>() / rs.len() as f64;
        let area = model.effective_area(*w);
        let cv = coefficient_of_variation(rs);
        if let Some(cv) = cv {
            if area > 0.0 {
                cv_obs.push((area, cv));
            }
        }
        rw.push(vec![
            Cell::from(*w),
            area.into(),
            rs.len().into(),
            mean.into(),
            model.resistance(*w).into(),
            cv.map(Cell::from).unwrap_or(Cell::Text(String::new())),
        ]);
    }
    let cv_model = fit_cv_model(&cv_obs)?;

    let mut cva = Table::new(&["area_um2", "cv_measured", "cv_model"]);
    for (a, cv) in &cv_obs {
        cva.push(vec![(*a).into(), (*cv).into(), cv_model.cv_rn(*a).into()]);
    }

    let mut sf = Table::new(&["width_um", "area_um2", "r_n_ohm", "f01_ghz", "cv_r_n", "sigma_f01_mhz"]);
    let mut sf_points = Vec::new();
    for (w, _) in by_width.values() {
        let area = model.effective_area(*w);
        if !(area > 0.0) {
            continue;
        }
        let r = model.resistance(*w);
        let f = transmon_frequency(r, args.ec_mhz, &consts)?;
        let cv = cv_model.cv_rn(area);
        let s = frequency_stdev(f, cv)?;
        sf_points.push((f, s));
        sf.push(vec![(*w).into(), area.into(), r.into(), f.into(), cv.into(), s.into()]);
    }

    let mut wc = Table::new(&["width_um", "die_row", "die_col", "n_samples", "cv"]);
    for (w, _) in by_width.values() {
        match chip_window_cv(&wafer, args.window, *w, Some(ref_day)) {
            Ok(summary) => {
                for win in summary.windows {
                    wc.push(vec![
                        (*w).into(),
                        win.die_row.into(),
                        win.die_col.into(),
                        win.n_samples.into(),
                        win.cv.into(),
                    ]);
                }
            }
            Err(e) => out.note(format!("window CV skipped: {e}")),
        }
    }

    let aging = aging_deltas(&wafer);
    let mut ag = Table::new(&["width_um", "area_um2", "matched", "mean_relative_change"]);
    for e in &aging.entries {
        ag.push(vec![
            e.width_um.into(),
            e.area_um2.into(),
            e.matched.into(),
            e.mean_relative_change.into(),
        ]);
    }

    out.json(
        "junction_fit.json",
        &Report {
            wafer_label: &label,
            n_samples: samples.len(),
            n_kept: kept.len(),
            open_threshold_ohm: args.open_threshold_ohm,
            open_circuits: &open,
            reference_day: ref_day,
            resistance_model: model,
            cv_model,
            ec_mhz: args.ec_mhz,
            gap_uev: args.gap_uev,
            aging: &aging,
        },
    )?;
    out.table("resistance_by_width", &rw)?;
    out.table("cv_vs_area", &cva)?;
    out.table("sigma_f01", &sf)?;
    out.table("window_cv", &wc)?;
    out.table("aging", &ag)?;

    let widths: Vec<f64> = by_width.values().map(|v| v.0).collect();
    let (wmin, wmax) = widths
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &w| (a.min(w), b.max(w)));
    let grid: Vec<f64> = (0..=50).map(|k| wmin + (wmax - wmin) * k as f64 / 50.0).collect();
    let measured: Vec<(f64, f64)> = ref_samples.iter().map(|s| (s.width_um, s.r_n_ohm * 1e-3)).collect();
    let fit: Vec<(f64, f64)> = grid.iter().map(|&w| (w, model.resistance(w) * 1e-3)).collect();
    out.text(
        "resistance_vs_width.svg",
        &Plot::new("Normal-state resistance", "designed width (µm)", "R_N (kΩ)")
            .with(Series::markers("measured", measured))
            .with(Series::line("R_J/(d−Δd)²", fit))
            .render(),
    )?;
    let amin = cv_obs.iter().map(|o| o.0).fold(f64::INFINITY, f64::min);
    let amax = cv_obs.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
    let agrid: Vec<(f64, f64)> = (0..=50)
        .map(|k| {
            let a = amin + (amax - amin) * k as f64 / 50.0;
            (a, 100.0 * cv_model.cv_rn(a))
        })
        .collect();
    out.text(
        "cv_vs_area.svg",
        &Plot::new("Resistance variability", "junction area (µm²)", "CV of R_N (%)")
            .with(Series::markers("measured", cv_obs.iter().map(|(a, c)| (*a, 100.0 * c)).collect()))
            .with(Series::line("model", agrid))
            .render(),
    )?;
    out.text(
        "sigma_f01.svg",
        &Plot::new("Predicted frequency spread", "f01 (GHz)", "σ_f01 (MHz)")
            .with(Series::line("model", sf_points))
            .render(),
    )?;
    out.text(
        "aging.svg",
        &Plot::new("Resistance aging", "junction area (µm²)", "mean ΔR/R (%)")
            .with(Series::markers(
                "first to last day",
                aging.entries.iter().map(|e| (e.area_um2, 100.0 * e.mean_relative_change)).collect(),
            ))
            .render(),
    )?;
    let m = out.finish()?;
    println!(
        "R_J = {:.1} Ω·µm², Δd = {:.1} nm, CV_RJ = {:.2}%, σ_d = {:.2} nm ({} artifacts in {})",
        model.r_j,
        model.delta_d_nm,
        100.0 * cv_model.cv_rj,
        cv_model.sigma_d_nm,
        m.artifacts.len(),
        ctx.out_dir.display()
    );
    Ok(())
}
