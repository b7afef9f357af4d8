//! `tls-fit`, `tls-sim` and `tls-mc`.

use std::fs;
use std::path::{Path, PathBuf};

use crowding::tls_analysis::{
    add_relative_noise, fit_tls_peaks, lorentzian_rate, simulate_spectrum, tls_census, PeakFitOptions, RateTrace,
    SpectroscopyPoint, SpectroscopyTrace, TlsRecord, DEFAULT_CENSUS_THRESHOLD_KHZ,
};
use crowding::tls_collision_mc::{
    expected_dead_qubits, naive_expected_dead_qubits, simulate_dead_qubits, sweep, TlsMcConfig, TlsSweepAxis,
};
use serde::{Deserialize, Serialize};

use super::Ctx;
use crate::config;
use crate::error::{CliError, CliResult};
use crate::output::{Output, Table};
use crate::svg::{Plot, Series};

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    /// Trace CSV: either f_ghz,p1,ps,p0 (swap spectroscopy) or f_ghz,gamma1_per_us.
    pub csv: PathBuf,
    /// Swap time Ts (µs); overrides a `# ts_us=` header line.
    #[arg(long)]
    pub ts_us: Option<f64>,
    /// Minimum peak prominence (µs⁻¹); default is ten robust standard deviations.
    #[arg(long)]
    pub min_prominence: Option<f64>,
    /// Minimum half-width of each local fit window (grid points).
    #[arg(long, default_value_t = 10)]
    pub half_window: usize,
    /// Coupling threshold of the census (kHz).
    #[arg(long, default_value_t = DEFAULT_CENSUS_THRESHOLD_KHZ)]
    pub census_threshold_khz: f64,
}

#[derive(Debug, Deserialize)]
struct SpectroscopyRow {
    f_ghz: f64,
    p1: f64,
    ps: f64,
    p0: f64,
}

#[derive(Debug, Deserialize)]
struct RateRow {
    f_ghz: f64,
    gamma1_per_us: f64,
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn row_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    CliError::Input(format!("{}: line {line}: {e}", path.display()))
}

/// Reads a trace file, converting swap-spectroscopy populations to rates.
/// Returns the rate trace and the points rejected by the population check.
pub fn read_trace(path: &Path, ts_override: Option<f64>) -> CliResult<(RateTrace, Vec<(f64, String)>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv_reader(&text);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| row_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let has = |c: &str| headers.iter().any(|h| h == c);
    if has("p1") && has("ps") && has("p0") {
        let ts = match ts_override {
            Some(t) => t,
            None => text
                .lines()
                .filter_map(|l| l.trim().strip_prefix('#'))
                .filter_map(|l| l.trim().strip_prefix("ts_us="))
                .next()
                .ok_or_else(|| CliError::Input(format!("{}: swap time missing; add `# ts_us=` or --ts-us", path.display())))?
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Input(format!("{}: bad ts_us: {e}", path.display())))?,
        };
        let mut points = Vec::new();
        for r in rdr.deserialize::<SpectroscopyRow>() {
            let r = r.map_err(|e| row_error(path, e))?;
            points.push(SpectroscopyPoint {
                f_ghz: r.f_ghz,
                p1: r.p1,
                ps: r.ps,
                p0: r.p0,
            });
        }
        if points.is_empty() {
            return Err(CliError::Input(format!("{}: no trace rows", path.display())));
        }
        let trace = SpectroscopyTrace {
            points,
            swap_time_us: ts,
        };
        let (rates, bad) = trace.to_rates()?;
        Ok((rates, bad.into_iter().map(|(f, e)| (f, e.to_string())).collect()))
    } else if has("gamma1_per_us") {
        let (mut f, mut g) = (Vec::new(), Vec::new());
        for r in rdr.deserialize::<RateRow>() {
            let r = r.map_err(|e| row_error(path, e))?;
            f.push(r.f_ghz);
            g.push(r.gamma1_per_us);
        }
        if f.is_empty() {
            return Err(CliError::Input(format!("{}: no trace rows", path.display())));
        }
        if f.windows(2).any(|w| w[1] < w[0]) {
            return Err(CliError::Input(format!("{}: rows are not sorted by frequency", path.display())));
        }
        Ok((RateTrace { f_ghz: f, gamma1_per_us: g }, vec![]))
    } else {
        Err(CliError::Input(format!(
            "{}: header must contain f_ghz,p1,ps,p0 or f_ghz,gamma1_per_us",
            path.display()
        )))
    }
}

fn model_curve(trace: &RateTrace, records: &[TlsRecord]) -> Vec<f64> {
    let bg = records.first().map(|r| r.gamma_1q_per_us).unwrap_or(0.0);
    trace
        .f_ghz
        .iter()
        .map(|&f| {
            bg + records
                .iter()
                .map(|r| lorentzian_rate((f - r.f_d_ghz) * 1e3, r) - r.gamma_1q_per_us)
                .sum::<f64>()
        })
        .collect()
}

fn spectrum_table(trace: &RateTrace, model: Option<&[f64]>) -> Table {
    let mut t = if model.is_some() {
        Table::new(&["f_ghz", "gamma1_per_us", "model_gamma1_per_us"])
    } else {
        Table::new(&["f_ghz", "gamma1_per_us"])
    };
    for (i, (&f, &g)) in trace.f_ghz.iter().zip(&trace.gamma1_per_us).enumerate() {
        let mut row = vec![f.into(), g.into()];
        if let Some(m) = model {
            row.push(m[i].into());
        }
        t.push(row);
    }
    t
}

#[derive(Serialize)]
struct FitReport<'a> {
    n_points: usize,
    rejected_points: &'a [(f64, String)],
    options: PeakFitOptions,
    census_threshold_khz: f64,
    peaks: &'a [crowding::tls_analysis::TlsFit],
}

pub fn fit(ctx: &Ctx, args: FitArgs) -> CliResult<()> {
    let mut out = ctx.output("tls-fit")?;
    out.add_input(&args.csv)?;
    let opts = PeakFitOptions {
        min_prominence: args.min_prominence,
        half_window: args.half_window,
    };
    out.set_config(&(opts, args.ts_us, args.census_threshold_khz))?;
    let (trace, rejected) = read_trace(&args.csv, args.ts_us)?;
    for (f, e) in &rejected {
        out.note(format!("point at {f} GHz rejected: {e}"));
    }
    let peaks = fit_tls_peaks(&trace, &opts)?;
    for p in peaks.iter().filter(|p| !p.converged) {
        out.note(format!("fit near {:.4} GHz did not converge; initial estimate kept", p.record.f_d_ghz));
    }
    let records: Vec<TlsRecord> = peaks.iter().map(|p| p.record).collect();
    let model = model_curve(&trace, &records);

    let mut pk = Table::new(&[
        "f_d_ghz",
        "g_d_khz",
        "gamma_per_us",
        "gamma_1q_per_us",
        "prominence_per_us",
        "residual_rms_per_us",
        "converged",
    ]);
    for p in &peaks {
        pk.push(vec![
            p.record.f_d_ghz.into(),
            p.record.g_d_khz.into(),
            p.record.gamma_per_us.into(),
            p.record.gamma_1q_per_us.into(),
            p.prominence.into(),
            p.residual_rms.into(),
            p.converged.into(),
        ]);
    }
    let (lo, hi) = (
        trace.f_ghz.first().copied().unwrap_or(0.0),
        trace.f_ghz.last().copied().unwrap_or(0.0),
    );
    let census = tls_census(&records, args.census_threshold_khz, lo, hi);
    let mut cs = Table::new(&["f_ghz", "cumulative_tls"]);
    for (f, n) in &census {
        cs.push(vec![(*f).into(), (*n).into()]);
    }

    out.json(
        "tls_fit.json",
        &FitReport {
            n_points: trace.f_ghz.len(),
            rejected_points: &rejected,
            options: opts,
            census_threshold_khz: args.census_threshold_khz,
            peaks: &peaks,
        },
    )?;
    out.table("tls_peaks", &pk)?;
    out.table("rates", &spectrum_table(&trace, Some(&model)))?;
    out.table("tls_census", &cs)?;
    let pts = |v: &[f64]| trace.f_ghz.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    out.text(
        "spectrum.svg",
        &Plot::new("Relaxation spectrum", "f (GHz)", "Γ1 (µs⁻¹)")
            .with(Series::markers("measured", pts(&trace.gamma1_per_us)))
            .with(Series::line("fitted Lorentzians", pts(&model)))
            .render(),
    )?;
    let mut steps = Vec::new();
    for w in census.windows(2) {
        steps.push((w[1].0, w[0].1 as f64));
        steps.push((w[1].0, w[1].1 as f64));
    }
    steps.insert(0, (lo, 0.0));
    steps.push((hi, census.last().map(|c| c.1).unwrap_or(0) as f64));
    out.text(
        "tls_census.svg",
        &Plot::new(
            format!("TLS census (g/2π > {} kHz)", args.census_threshold_khz),
            "f (GHz)",
            "cumulative count",
        )
        .with(Series::line("TLS", steps))
        .render(),
    )?;
    out.finish()?;
    println!("{} TLS peaks fitted over {} points", peaks.len(), trace.f_ghz.len());
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct SimArgs {
    /// TOML or JSON config (see SCHEMAS.md).
    pub config: PathBuf,
}

/// One TLS entry of a `tls-sim` config.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsEntry {
    pub f_d_ghz: f64,
    pub g_d_khz: f64,
    pub gamma_per_us: f64,
}

/// `tls-sim` configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub f_start_ghz: f64,
    pub f_stop_ghz: f64,
    pub f_step_mhz: f64,
    pub gamma_1q_per_us: f64,
    /// Relative Gaussian noise on every rate (fraction).
    pub noise_fraction: f64,
    pub seed: u64,
    pub tls: Vec<TlsEntry>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            f_start_ghz: 4.0,
            f_stop_ghz: 6.0,
            f_step_mhz: 1.0,
            gamma_1q_per_us: 0.02,
            noise_fraction: 0.0,
            seed: 1,
            tls: vec![],
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.f_step_mhz > 0.0) || !(self.f_stop_ghz > self.f_start_ghz) {
            return Err(CliError::Input("grid needs f_stop_ghz > f_start_ghz and a positive step".into()));
        }
        if !(self.gamma_1q_per_us >= 0.0) || !(self.noise_fraction >= 0.0) {
            return Err(CliError::Input("background rate and noise must be non-negative".into()));
        }
        for t in &self.tls {
            if !(t.gamma_per_us > 0.0) || !(t.g_d_khz >= 0.0) {
                return Err(CliError::Input(format!(
                    "TLS at {} GHz needs positive gamma_per_us and non-negative g_d_khz",
                    t.f_d_ghz
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.f_stop_ghz - self.f_start_ghz) * 1e3 / self.f_step_mhz + 1e-9).floor() as usize;
        (0..=n).map(|k| self.f_start_ghz + k as f64 * self.f_step_mhz * 1e-3).collect()
    }
}

pub fn sim(ctx: &Ctx, args: SimArgs) -> CliResult<()> {
    let mut out = ctx.output("tls-sim")?;
    out.add_input(&args.config)?;
    let mut cfg: SimConfig = config::load(&args.config)?;
    cfg.seed = ctx.seed_or(cfg.seed);
    cfg.validate()?;
    out.set_seed(cfg.seed);
    out.set_config(&cfg)?;
    let records: Vec<TlsRecord> = cfg
        .tls
        .iter()
        .map(|t| TlsRecord {
            f_d_ghz: t.f_d_ghz,
            g_d_khz: t.g_d_khz,
            gamma_per_us: t.gamma_per_us,
            gamma_1q_per_us: cfg.gamma_1q_per_us,
        })
        .collect();
    let clean = simulate_spectrum(&records, cfg.gamma_1q_per_us, &cfg.grid());
    let trace = add_relative_noise(&clean, cfg.noise_fraction, cfg.seed)?;
    out.table("spectrum", &spectrum_table(&trace, None))?;
    let pts = |t: &RateTrace| t.f_ghz.iter().copied().zip(t.gamma1_per_us.iter().copied()).collect::<Vec<_>>();
    out.text(
        "spectrum.svg",
        &Plot::new("Synthetic relaxation spectrum", "f (GHz)", "Γ1 (µs⁻¹)")
            .with(Series::line("with noise", pts(&trace)))
            .with(Series::line("noise-free", pts(&clean)))
            .render(),
    )?;
    out.finish()?;
    println!("{} points, {} TLSs", trace.f_ghz.len(), records.len());
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct McArgs {
    /// TOML or JSON config (see SCHEMAS.md); defaults apply when omitted.
    pub config: Option<PathBuf>,
}

/// Optional one-parameter sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsSweep {
    pub axis: TlsSweepAxis,
    pub values: Vec<f64>,
}

/// `tls-mc` configuration: the simulation parameters plus an optional sweep.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct McConfig {
    #[serde(flatten)]
    pub mc: TlsMcConfig,
    #[serde(default)]
    pub sweep: Option<TlsSweep>,
}

/// Number of trials per outcome `0..=max`.
pub fn tally(per_trial: &[usize]) -> Vec<usize> {
    let max = per_trial.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for &k in per_trial {
        counts[k] += 1;
    }
    counts
}

pub fn histogram(per_trial: &[usize]) -> Table {
    let counts = tally(per_trial);
    let mut t = Table::new(&["count", "trials"]);
    for (k, n) in counts.into_iter().enumerate() {
        t.push(vec![k.into(), n.into()]);
    }
    t
}

pub fn write_histogram_svg(out: &mut Output, name: &str, title: &str, per_trial: &[usize]) -> CliResult<()> {
    let counts = tally(per_trial);
    let n = per_trial.len().max(1) as f64;
    let pts = counts.iter().enumerate().map(|(k, &c)| (k as f64, c as f64 / n)).collect();
    out.text(
        name,
        &Plot::new(title, "count per trial", "fraction of trials")
            .with(Series::markers("Monte Carlo", pts))
            .render(),
    )?;
    Ok(())
}

pub fn mc(ctx: &Ctx, args: McArgs) -> CliResult<()> {
    let mut out = ctx.output("tls-mc")?;
    if let Some(p) = &args.config {
        out.add_input(p)?;
    }
    let mut cfg: McConfig = config::load_or_default(args.config.as_deref())?;
    cfg.mc.seed = ctx.seed_or(cfg.mc.seed);
    cfg.mc.validate()?;
    out.set_seed(cfg.mc.seed);
    out.set_config(&cfg)?;

    let report = simulate_dead_qubits(&cfg.mc)?;
    let expected = expected_dead_qubits(&cfg.mc);
    out.table("dead_qubit_histogram", &histogram(&report.per_trial))?;
    write_histogram_svg(&mut out, "dead_qubits.svg", "Qubits disabled by junction TLSs", &report.per_trial)?;

    let mut sweep_points = None;
    if let Some(sw) = &cfg.sweep {
        let pts = sweep(&cfg.mc, sw.axis, &sw.values)?;
        let mut t = Table::new(&["axis_value", "mean", "stdev", "ci_low", "ci_high", "expected"]);
        for p in &pts {
            t.push(vec![
                p.axis_value.into(),
                p.stats.mean.into(),
                p.stats.stdev.into(),
                p.stats.ci_low.into(),
                p.stats.ci_high.into(),
                p.expected.into(),
            ]);
        }
        out.table("sweep", &t)?;
        let axis = serde_json::to_value(sw.axis).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        out.text(
            "sweep.svg",
            &Plot::new("Dead qubits versus ".to_string() + &axis, axis.clone(), "dead qubits")
                .with(Series::markers("Monte Carlo mean", pts.iter().map(|p| (p.axis_value, p.stats.mean)).collect()))
                .with(Series::line("expectation", pts.iter().map(|p| (p.axis_value, p.expected)).collect()))
                .render(),
        )?;
        sweep_points = Some(pts);
    }

    out.json(
        "tls_mc.json",
        &serde_json::json!({
            "config": cfg,
            "expected_tls": cfg.mc.expected_tls(),
            "expected_dead_qubits": expected,
            "naive_expected_dead_qubits": naive_expected_dead_qubits(&cfg.mc),
            "stats": report.stats,
            "sweep": sweep_points,
        }),
    )?;
    out.finish()?;
    println!(
        "dead qubits: mean {:.3} (95% CI {:.3}..{:.3}), expectation {:.3}",
        report.stats.mean, report.stats.ci_low, report.stats.ci_high, expected
    );
    Ok(())
}
