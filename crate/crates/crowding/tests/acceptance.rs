//! Acceptance suite.
//!
//! Runs every acceptance criterion once and prints a single `PASS` or `FAIL`
//! line for each, followed by the measured quantities. The process exits with
//! a non-zero status when any criterion fails. Tolerances are pinned in the
//! `tol` module so they can be read in one place.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use crowding::collision_bounds::{
    build_tables, g_fractions, BoundTable, ScanConfig, REPORT_TABLES, THRESHOLDS,
};
use crowding::device_model::{Group, PhysicalConstants};
use crowding::gate_dynamics::{
    analytic_two_level, catalog, collision_fidelity, propagate, propagate_frame, two_level_hamiltonian,
    PropagationOptions,
};
use crowding::junction_stats::{
    fit_cv_model, fit_resistance_model, frequency_stdev, transmon_frequency, JunctionSample,
};
use crowding::lattice_allocation::{allocate_unit_cell, tile_lattice, AllocationRules};
use crowding::qpu_mc::{simulate, QpuMcConfig};
use crowding::tls_analysis::{
    add_relative_noise, fit_tls_peaks, simulate_spectrum, three_point_t1, PeakFitOptions, TlsRecord,
};
use crowding::tls_collision_mc::{
    fitted_slope, naive_expected_dead_qubits, simulate_dead_qubits, sweep, TlsCountMode, TlsMcConfig,
    TlsSweepAxis,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

mod tol {
    use std::time::Duration;

    /// Entrywise agreement of numeric and closed-form two-level propagators.
    pub const PROPAGATOR_ENTRYWISE: f64 = 1e-9;
    pub const PROPAGATOR_BUDGET: Duration = Duration::from_secs(10);

    /// Bound-table spot checks: relative or absolute, whichever is larger.
    pub const BOUND_RELATIVE: f64 = 0.10;
    pub const BOUND_ABSOLUTE_GHZ: f64 = 0.003;
    pub const TABLE_BUILD_BUDGET: Duration = Duration::from_secs(30 * 60);

    /// Fidelity with the colliding coupling switched off.
    pub const ZERO_COUPLING_FIDELITY: f64 = 1e-9;

    /// TLS Monte Carlo agreement with the closed form, in standard errors.
    pub const TLS_STANDARD_ERRORS: f64 = 3.0;
    pub const TLS_MEAN_BAND: (f64, f64) = (0.8, 1.8);
    pub const TLS_BUDGET: Duration = Duration::from_secs(10);

    /// Fitted dead-qubit slope against the leading-order slope.
    pub const TLS_SLOPE_RELATIVE: f64 = 0.15;

    /// Processor Monte Carlo headline and ratio bands.
    pub const QPU_MEAN_BAND: (f64, f64) = (1.5, 4.5);
    pub const QPU_SIGMA_RATIO_BAND: (f64, f64) = (1.9, 3.5);
    pub const QPU_CROSSTALK_RATIO_BAND: (f64, f64) = (4.9, 9.1);
    pub const QPU_FIDELITY_RATIO_BAND: (f64, f64) = (3.5, 6.5);
    pub const QPU_MIN_TRIALS: u64 = 2000;

    /// Junction-statistics round trips and anchors.
    pub const FIT_RELATIVE: f64 = 1e-9;
    pub const TRANSMON_F01_GHZ: (f64, f64) = (4.65, 0.05);

    /// TLS spectroscopy round trip.
    pub const TLS_COUPLING_RELATIVE: f64 = 0.10;
    pub const THREE_POINT_RELATIVE: f64 = 1e-12;
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn within(value: f64, band: (f64, f64)) -> bool {
    value >= band.0 && value <= band.1
}

fn max_entry_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Numeric propagation of the detuned two-level system against its closed form
/// on a 10 × 10 × 10 grid of coupling, detuning and time.
fn propagator_oracle() -> Outcome {
    let gs: Vec<f64> = (0..10).map(|k| 0.005 + 0.03 * k as f64).collect();
    let deltas: Vec<f64> = (0..10).map(|k| 2.0 * PI * 0.11 * k as f64).collect();
    let times: Vec<f64> = (0..10).map(|k| 2.0 + 22.0 * k as f64).collect();
    let start = Instant::now();
    let (mut worst_rk4, mut worst_frame, mut points) = (0.0f64, 0.0f64, 0usize);
    let opts = PropagationOptions::default();
    for &g in &gs {
        for &d in &deltas {
            for &t in &times {
                let h = two_level_hamiltonian(g, d);
                let exact = analytic_two_level(g, d, t);
                let rk4 = match propagate(&h, t, &opts) {
                    Ok(u) => u,
                    Err(e) => return Outcome::new(false, format!("propagate failed at g={g}, Δ={d}, t={t}: {e}")),
                };
                let frame = match propagate_frame(&h, t) {
                    Ok(u) => u,
                    Err(e) => return Outcome::new(false, format!("frame propagation failed: {e}")),
                };
                worst_rk4 = worst_rk4.max(max_entry_diff(&rk4, &exact));
                worst_frame = worst_frame.max(max_entry_diff(&frame, &exact));
                points += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = points == 1000
        && worst_rk4 < tol::PROPAGATOR_ENTRYWISE
        && worst_frame < tol::PROPAGATOR_ENTRYWISE
        && elapsed < tol::PROPAGATOR_BUDGET;
    Outcome::new(
        pass,
        format!(
            "{points} points, max |ΔU| rk4 {worst_rk4:.2e}, frame {worst_frame:.2e}, {:.2} s",
            secs(elapsed)
        ),
    )
}

/// Printed values of twelve table cells: (table, g fraction, threshold, GHz).
const SPOT_CELLS: [(&str, f64, f64, f64); 12] = [
    ("single_qubit", 1.0, 0.999, 0.595),
    ("CZ_CZ_same", 1.0, 0.9999, 0.167),
    ("iSWAP_iSWAP", 0.5, 0.999, 0.030),
    ("CZ_CZ_same", 1.0, 0.999, 0.052),
    ("colliding_iSWAP_desired_CZ_same", 1.0, 0.999, 0.080),
    ("colliding_CZ_desired_iSWAP_same", 1.0, 0.999, 0.071),
    ("CZ_CZ_neighbor", 1.0, 0.999, 0.097),
    ("CZ_CZ_neighbor_more", 1.0, 0.999, 0.102),
    ("colliding_iSWAP_desired_CZ_neighbor", 1.0, 0.999, 0.093),
    ("colliding_CZ_desired_iSWAP_neighbor", 1.0, 0.999, 0.071),
    ("colliding_CZ_desired_iSWAP_neighbor_more", 1.0, 0.999, 0.078),
    ("iSWAP_iSWAP", 1.0, 0.999, 0.077),
];

fn bound_tables(table: &BoundTable, build_time: Duration) -> Outcome {
    let mut misses = vec![];
    for (name, g, f, printed) in SPOT_CELLS {
        let report = match REPORT_TABLES.iter().find(|t| t.name == name) {
            Some(t) => t,
            None => return Outcome::new(false, format!("no report table named {name}")),
        };
        let computed = match report.value(table, g, f) {
            Ok(v) => v,
            Err(e) => return Outcome::new(false, format!("{name}: {e}")),
        };
        let allowed = (tol::BOUND_RELATIVE * printed).max(tol::BOUND_ABSOLUTE_GHZ);
        if (computed - printed).abs() > allowed + 1e-12 {
            misses.push(format!("{name} g={g} F>{f}: {computed:.3} vs {printed:.3}"));
        }
    }
    let pass = misses.is_empty() && build_time < tol::TABLE_BUILD_BUDGET;
    let mut detail = format!(
        "{} of {} cells within tolerance, {} entries built in {:.1} s",
        SPOT_CELLS.len() - misses.len(),
        SPOT_CELLS.len(),
        table.entries.len(),
        secs(build_time)
    );
    if !misses.is_empty() {
        detail.push_str("; outside: ");
        detail.push_str(&misses.join("; "));
    }
    Outcome::new(pass, detail)
}

fn monotonicity(table: &BoundTable) -> Outcome {
    let mut bad = vec![];
    for case in table.cases() {
        for g in g_fractions() {
            let row: Vec<f64> = THRESHOLDS
                .iter()
                .map(|&t| table.get(&case, g, t).unwrap_or(f64::NAN))
                .collect();
            if !row.windows(2).all(|w| w[0] <= w[1]) {
                bad.push(format!("{case} g={g:.1}: {row:?}"));
            }
        }
    }
    let mut worst_unity = 0.0f64;
    let mut n_cases = 0;
    for case in catalog() {
        n_cases += 1;
        for delta in [0.0, 0.013, 0.1, 0.47, 1.9] {
            match collision_fidelity(&case, delta, 0.0) {
                Ok(f) => worst_unity = worst_unity.max((f - 1.0).abs()),
                Err(e) => return Outcome::new(false, format!("{}: {e}", case.name)),
            }
        }
    }
    let pass = bad.is_empty() && n_cases == 13 && worst_unity <= tol::ZERO_COUPLING_FIDELITY;
    let mut detail = format!(
        "{} rows checked, {} out of order, max |F(g=0) − 1| = {worst_unity:.1e} over {n_cases} cases",
        table.cases().len() * g_fractions().len(),
        bad.len()
    );
    if !bad.is_empty() {
        detail.push_str(": ");
        detail.push_str(&bad.join("; "));
    }
    Outcome::new(pass, detail)
}

/// Window of a qubit at `f` clipped to `[lo, lo + span]`, as a fraction of the span.
fn clipped_window(f: f64, b_ghz: f64, lo: f64, span: f64) -> f64 {
    ((f + b_ghz).min(lo + span) - (f - b_ghz).max(lo)).max(0.0) / span
}

/// Edge-corrected expectation computed directly from the configuration.
fn tls_oracle(cfg: &TlsMcConfig) -> f64 {
    let lambda = cfg.rho_d * cfg.a_j;
    let m = (cfg.rho_d * cfg.a_j * cfg.n_qubits as f64).round();
    (0..cfg.n_qubits)
        .map(|q| {
            let f = cfg.allocation_ghz[q % cfg.allocation_ghz.len()];
            let p = clipped_window(f, cfg.bound_mhz * 1e-3, cfg.f_min_ghz, cfg.span_ghz);
            match cfg.count_mode {
                TlsCountMode::Poisson => 1.0 - (-lambda * p).exp(),
                TlsCountMode::Fixed => 1.0 - (1.0 - p / cfg.n_qubits as f64).powf(m),
            }
        })
        .sum()
}

fn tls_monte_carlo() -> Outcome {
    let mut parts = vec![];
    let mut pass = true;
    for mode in [TlsCountMode::Poisson, TlsCountMode::Fixed] {
        let cfg = TlsMcConfig {
            n_qubits: 100,
            a_j: 0.109,
            rho_d: 1.5,
            bound_mhz: 40.0,
            trials: 10_000,
            count_mode: mode,
            ..TlsMcConfig::default()
        };
        let start = Instant::now();
        let report = match simulate_dead_qubits(&cfg) {
            Ok(r) => r,
            Err(e) => return Outcome::new(false, format!("{mode:?}: {e}")),
        };
        let elapsed = start.elapsed();
        let expect = tls_oracle(&cfg);
        let s = report.stats;
        let z = (s.mean - expect).abs() / s.stderr;
        let ok = z <= tol::TLS_STANDARD_ERRORS && within(s.mean, tol::TLS_MEAN_BAND) && elapsed < tol::TLS_BUDGET;
        pass &= ok;
        parts.push(format!(
            "{mode:?}: mean {:.3} ± {:.3}, edge-corrected {expect:.3} ({z:.2} SE), {:.2} s",
            s.mean,
            s.stderr,
            secs(elapsed)
        ));
    }
    let naive = naive_expected_dead_qubits(&TlsMcConfig::default());
    parts.push(format!("unclipped estimate {naive:.3}"));
    Outcome::new(pass, parts.join("; "))
}

fn tls_slope() -> Outcome {
    let cfg = TlsMcConfig::default();
    let bs: Vec<f64> = (1..=10).map(|k| 10.0 * k as f64).collect();
    let points = match sweep(&cfg, TlsSweepAxis::BoundMhz, &bs) {
        Ok(p) => p,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.axis_value, p.stats.mean)).collect();
    let slope = fitted_slope(&xy);
    let analytic = 2.0 * cfg.n_qubits as f64 * cfg.rho_d * cfg.a_j / (cfg.span_ghz * 1e3);
    let rel = (slope - analytic) / analytic;
    Outcome::new(
        rel.abs() <= tol::TLS_SLOPE_RELATIVE,
        format!("slope {slope:.4} per MHz vs {analytic:.4} ({:+.1}%)", rel * 100.0),
    )
}

struct QpuRun {
    mean: f64,
    yield_fraction: f64,
}

fn qpu(table: &BoundTable, cfg: &QpuMcConfig) -> crowding::Result<QpuRun> {
    let cell = allocate_unit_cell(&AllocationRules::default())?;
    let layout = tile_lattice(10, 10, &cell)?;
    let r = simulate(&layout, table, cfg)?;
    Ok(QpuRun {
        mean: r.stats.mean,
        yield_fraction: r.yield_fraction,
    })
}

fn qpu_headline(table: &BoundTable) -> Outcome {
    let base = QpuMcConfig {
        sigma_f_mhz: 40.0,
        x_ac: 0.02,
        f_threshold: 0.999,
        trials: tol::QPU_MIN_TRIALS,
        ..QpuMcConfig::default()
    };
    let run = |cfg: QpuMcConfig| qpu(table, &cfg);
    let result = (|| -> crowding::Result<(f64, f64, f64, f64)> {
        let b = run(base)?.mean;
        let s = run(QpuMcConfig { sigma_f_mhz: 120.0, ..base })?.mean;
        let x = run(QpuMcConfig { x_ac: 0.10, ..base })?.mean;
        let f = run(QpuMcConfig { f_threshold: 0.9999, ..base })?.mean;
        Ok((b, s, x, f))
    })();
    let (b, s, x, f) = match result {
        Ok(v) => v,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let (rs, rx, rf) = (s / b, x / b, f / b);
    let pass = within(b, tol::QPU_MEAN_BAND)
        && within(rs, tol::QPU_SIGMA_RATIO_BAND)
        && within(rx, tol::QPU_CROSSTALK_RATIO_BAND)
        && within(rf, tol::QPU_FIDELITY_RATIO_BAND);
    Outcome::new(
        pass,
        format!(
            "mean {b:.3} (band {:?}); σ 120/40 ratio {rs:.2} (band {:?}); X_AC 10%/2% ratio {rx:.2} (band {:?}); \
             F 0.9999/0.999 ratio {rf:.2} (band {:?})",
            tol::QPU_MEAN_BAND,
            tol::QPU_SIGMA_RATIO_BAND,
            tol::QPU_CROSSTALK_RATIO_BAND,
            tol::QPU_FIDELITY_RATIO_BAND
        ),
    )
}

fn qpu_zero_noise(table: &BoundTable) -> Outcome {
    let cfg = QpuMcConfig {
        sigma_f_mhz: 0.0,
        x_ac: 0.02,
        f_threshold: 0.999,
        trials: 200,
        ..QpuMcConfig::default()
    };
    match qpu(table, &cfg) {
        Ok(r) => Outcome::new(
            r.mean == 0.0 && r.yield_fraction == 1.0,
            format!("mean {} collisions, yield {}", r.mean, r.yield_fraction),
        ),
        Err(e) => Outcome::new(false, e.to_string()),
    }
}

fn qpu_yield_trend(table: &BoundTable) -> Outcome {
    let mut yields = vec![];
    for sigma in [10.0, 40.0, 120.0] {
        let cfg = QpuMcConfig {
            sigma_f_mhz: sigma,
            trials: tol::QPU_MIN_TRIALS,
            ..QpuMcConfig::default()
        };
        match qpu(table, &cfg) {
            Ok(r) => yields.push((sigma, r.yield_fraction)),
            Err(e) => return Outcome::new(false, e.to_string()),
        }
    }
    let pass = yields.windows(2).all(|w| w[0].1 > w[1].1);
    let detail = yields
        .iter()
        .map(|(s, y)| format!("σ={s} MHz: yield {y:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::new(pass, detail)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn junction_statistics() -> Outcome {
    let (r_j, dd_nm) = (920.0, 15.0);
    let mut samples = vec![];
    for (k, w) in [0.12, 0.16, 0.2, 0.24, 0.3].into_iter().enumerate() {
        let eff = w - dd_nm * 1e-3;
        samples.push(JunctionSample {
            die_row: k as i32,
            die_col: 0,
            width_um: w,
            r_n_ohm: r_j / (eff * eff),
            day: 0,
        });
    }
    let rm = match fit_resistance_model(&samples) {
        Ok(m) => m,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let (cv_rj, sigma_d_nm) = (0.014, 2.7);
    let obs: Vec<(f64, f64)> = [0.01, 0.02, 0.05, 0.1, 0.2]
        .iter()
        .map(|&a: &f64| {
            let ca = 2.0 * sigma_d_nm * 1e-3 / a.sqrt();
            (a, (cv_rj * cv_rj * ca * ca + cv_rj * cv_rj + ca * ca).sqrt())
        })
        .collect();
    let cm = match fit_cv_model(&obs) {
        Ok(m) => m,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let fit_errs = [
        rel_err(rm.r_j, r_j),
        rel_err(rm.delta_d_nm, dd_nm),
        rel_err(cm.cv_rj, cv_rj),
        rel_err(cm.sigma_d_nm, sigma_d_nm),
    ];
    let worst_fit = fit_errs.iter().cloned().fold(0.0, f64::max);
    let f01 = transmon_frequency(9330.0, 200.0, &PhysicalConstants::default()).unwrap_or(f64::NAN);
    let sd = frequency_stdev(4.5, 0.02).unwrap_or(f64::NAN);
    let pass = worst_fit < tol::FIT_RELATIVE
        && (f01 - tol::TRANSMON_F01_GHZ.0).abs() <= tol::TRANSMON_F01_GHZ.1
        && sd == 45.0;
    Outcome::new(
        pass,
        format!("worst fit error {worst_fit:.1e}, f01(9.33 kΩ, 200 MHz) = {f01:.4} GHz, σ_f(4.5 GHz, 2%) = {sd} MHz"),
    )
}

fn tls_fitting() -> Outcome {
    let step_ghz = 2e-4;
    let grid: Vec<f64> = (0..=5000).map(|i| 4.3 + i as f64 * step_ghz).collect();
    let truth = [(4.52, 150.0, 10.0), (4.91, 110.0, 6.0), (5.13, 220.0, 14.0)].map(|(f, g, gamma)| TlsRecord {
        f_d_ghz: f,
        g_d_khz: g,
        gamma_per_us: gamma,
        gamma_1q_per_us: 0.02,
    });
    let clean = simulate_spectrum(&truth, 0.02, &grid);
    let noisy = match add_relative_noise(&clean, 0.01, 11) {
        Ok(t) => t,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let fits = match fit_tls_peaks(&noisy, &PeakFitOptions::default()) {
        Ok(f) => f,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let mut worst_g = 0.0f64;
    let mut worst_f_steps = 0.0f64;
    if fits.len() == truth.len() {
        for (fit, t) in fits.iter().zip(truth.iter()) {
            worst_g = worst_g.max(rel_err(fit.record.g_d_khz, t.g_d_khz));
            worst_f_steps = worst_f_steps.max((fit.record.f_d_ghz - t.f_d_ghz).abs() / step_ghz);
        }
    }
    let mut worst_t1 = 0.0f64;
    for (t1, ts, p1, p0) in [(12.5, 3.0, 0.93, 0.05), (40.0, 1.0, 0.99, 0.0), (3.3, 5.0, 0.8, 0.12)] {
        let ps = p0 + (p1 - p0) * (-ts / t1 as f64).exp();
        match three_point_t1(p1, ps, p0, ts) {
            Ok(v) => worst_t1 = worst_t1.max(rel_err(v, t1)),
            Err(e) => return Outcome::new(false, e.to_string()),
        }
    }
    let pass = fits.len() == truth.len()
        && worst_g <= tol::TLS_COUPLING_RELATIVE
        && worst_f_steps <= 1.0
        && worst_t1 <= tol::THREE_POINT_RELATIVE;
    Outcome::new(
        pass,
        format!(
            "{} of {} peaks, worst g error {:.2}%, worst f offset {worst_f_steps:.2} steps, worst T1 error {worst_t1:.1e}",
            fits.len(),
            truth.len(),
            worst_g * 100.0
        ),
    )
}

fn allocation() -> Outcome {
    let rules = AllocationRules {
        delta_q_mhz: 104.0,
        base_f_ghz: 4.3,
        bandwidth_ghz: 1.0,
        ..AllocationRules::default()
    };
    let cell = match allocate_unit_cell(&rules) {
        Ok(c) => c,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let printed_f = [4.3, 4.404, 4.508, 4.612, 4.988, 5.092, 5.196, 5.3];
    let printed_alpha = [-156.0, -156.0, -156.0, -156.0, -260.0, -260.0, -260.0, -260.0];
    let f: Vec<f64> = cell.qubits.iter().map(|q| q.f01).collect();
    let alpha: Vec<f64> = cell.qubits.iter().map(|q| q.alpha).collect();
    let groups_ok = cell.qubits[..4].iter().all(|q| q.group == Group::A)
        && cell.qubits[4..].iter().all(|q| q.group == Group::B);
    let pass = f == printed_f && alpha == printed_alpha && groups_ok;
    Outcome::new(pass, format!("f01 {f:?} GHz, α {alpha:?} MHz"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let table = build_tables(&ScanConfig::default());
    let build_time = start.elapsed();

    let with_table = |f: fn(&BoundTable) -> Outcome| match &table {
        Ok(t) => f(t),
        Err(e) => Outcome::new(false, format!("bound table build failed: {e}")),
    };

    let results: Vec<(&str, Outcome)> = vec![
        ("propagator oracle", propagator_oracle()),
        (
            "bound-table reproduction",
            match &table {
                Ok(t) => bound_tables(t, build_time),
                Err(e) => Outcome::new(false, format!("bound table build failed: {e}")),
            },
        ),
        ("monotonicity suite", with_table(monotonicity)),
        ("TLS Monte Carlo", tls_monte_carlo()),
        ("linear-in-b scaling", tls_slope()),
        ("QPU Monte Carlo headline", with_table(qpu_headline)),
        ("zero-noise baseline", with_table(qpu_zero_noise)),
        ("yield trend", with_table(qpu_yield_trend)),
        ("junction statistics", junction_statistics()),
        ("TLS fitting round trip", tls_fitting()),
        ("allocation", allocation()),
    ];

    let mut failed = 0;
    for (k, (name, outcome)) in results.iter().enumerate() {
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{:>2}] {name}: {}", k + 1, outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        results.len() - failed,
        secs(start.elapsed())
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
