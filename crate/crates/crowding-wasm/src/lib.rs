//! WebAssembly bindings for the browser demo.
//!
//! Every export has a plain-Rust twin (the `*_impl` functions) so the logic
//! can be tested natively; the exported wrappers only translate errors.
//! Structured results travel as JSON strings.

use std::cell::RefCell;

use crowding::collision_bounds::{build_tables, fidelity_curve, BoundTable, ScanConfig};
use crowding::gate_dynamics::{case_by_name, catalog, CaseEvaluator, PropagationMethod};
use crowding::lattice_allocation::{allocate_unit_cell, tile_lattice, AllocationRules};
use crowding::qpu_mc::{simulate, QpuMcConfig};
use crowding::tls_analysis::{simulate_spectrum, TlsRecord};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Names of every collision case, as a JSON array.
#[wasm_bindgen]
pub fn case_names() -> String {
    let names: Vec<String> = catalog().into_iter().map(|c| c.name).collect();
    serde_json::to_string(&names).unwrap_or_default()
}

pub fn fidelity_curve_impl(case: &str, g_fraction: f64, delta_max_ghz: f64, step_mhz: f64) -> crowding::Result<Vec<f64>> {
    let cfg = ScanConfig {
        grid_step_mhz: step_mhz,
        delta_max_ghz,
        ..ScanConfig::default()
    };
    cfg.validate()?;
    let eval = CaseEvaluator::new(case_by_name(case)?, PropagationMethod::Frame)?;
    fidelity_curve(&eval, g_fraction, &cfg)
}

/// Average gate fidelity of `case` on the grid `0, step, 2·step, …, delta_max`.
#[wasm_bindgen]
pub fn fidelity_curve_for(case: &str, g_fraction: f64, delta_max_ghz: f64, step_mhz: f64) -> Result<Vec<f64>, JsError> {
    fidelity_curve_impl(case, g_fraction, delta_max_ghz, step_mhz).map_err(js_err)
}

/// One TLS of the spectrum demo.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DemoTls {
    pub f_d_ghz: f64,
    pub g_d_khz: f64,
    pub gamma_per_us: f64,
}

pub fn tls_spectrum_impl(
    tls_json: &str,
    gamma_1q_per_us: f64,
    f_start_ghz: f64,
    f_stop_ghz: f64,
    n_points: usize,
) -> Result<Vec<f64>, String> {
    let tls: Vec<DemoTls> = serde_json::from_str(tls_json).map_err(|e| e.to_string())?;
    if n_points < 2 || !(f_stop_ghz > f_start_ghz) {
        return Err("need at least two points and f_stop > f_start".into());
    }
    if tls.iter().any(|t| !(t.gamma_per_us > 0.0)) {
        return Err("every TLS needs a positive gamma_per_us".into());
    }
    let records: Vec<TlsRecord> = tls
        .iter()
        .map(|t| TlsRecord {
            f_d_ghz: t.f_d_ghz,
            g_d_khz: t.g_d_khz,
            gamma_per_us: t.gamma_per_us,
            gamma_1q_per_us,
        })
        .collect();
    let step = (f_stop_ghz - f_start_ghz) / (n_points - 1) as f64;
    let grid: Vec<f64> = (0..n_points).map(|k| f_start_ghz + k as f64 * step).collect();
    Ok(simulate_spectrum(&records, gamma_1q_per_us, &grid).gamma1_per_us)
}

/// Γ1 (µs⁻¹) on an evenly spaced grid for a JSON list of
/// `{f_d_ghz, g_d_khz, gamma_per_us}` entries.
#[wasm_bindgen]
pub fn tls_spectrum(
    tls_json: &str,
    gamma_1q_per_us: f64,
    f_start_ghz: f64,
    f_stop_ghz: f64,
    n_points: usize,
) -> Result<Vec<f64>, JsError> {
    tls_spectrum_impl(tls_json, gamma_1q_per_us, f_start_ghz, f_stop_ghz, n_points).map_err(|e| JsError::new(&e))
}

thread_local! {
    static TABLE: RefCell<Option<BoundTable>> = const { RefCell::new(None) };
}

/// Grid step of the bound table built in the browser (MHz).
pub const DEMO_GRID_STEP_MHZ: f64 = 2.0;

fn with_table<T>(f: impl FnOnce(&BoundTable) -> crowding::Result<T>) -> crowding::Result<T> {
    TABLE.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.is_none() {
            *slot = Some(build_tables(&ScanConfig {
                grid_step_mhz: DEMO_GRID_STEP_MHZ,
                ..ScanConfig::default()
            })?);
        }
        f(slot.as_ref().expect("table just built"))
    })
}

/// Result of one demo Monte Carlo run.
#[derive(Debug, Clone, Serialize)]
pub struct DemoQpuResult {
    pub unit_cell_ghz: Vec<f64>,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub yield_fraction: f64,
    /// `histogram[k]` = number of trials with `k` collisions.
    pub histogram: Vec<usize>,
    pub breakdown: Vec<(String, u64)>,
}

#[allow(clippy::too_many_arguments)]
pub fn qpu_mc_impl(
    rows: usize,
    cols: usize,
    delta_q_mhz: f64,
    sigma_f_mhz: f64,
    x_ac: f64,
    f_threshold: f64,
    trials: u32,
    seed: u32,
) -> crowding::Result<DemoQpuResult> {
    let cell = allocate_unit_cell(&AllocationRules {
        delta_q_mhz,
        ..AllocationRules::default()
    })?;
    let layout = tile_lattice(rows, cols, &cell)?;
    let cfg = QpuMcConfig {
        sigma_f_mhz,
        x_ac,
        f_threshold,
        trials: trials as u64,
        seed: seed as u64,
        ..QpuMcConfig::default()
    };
    cfg.validate()?;
    let report = with_table(|t| simulate(&layout, t, &cfg))?;
    let max = report.per_trial.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0usize; max + 1];
    for &k in &report.per_trial {
        histogram[k] += 1;
    }
    Ok(DemoQpuResult {
        unit_cell_ghz: cell.qubits.iter().map(|q| q.f01).collect(),
        mean: report.stats.mean,
        ci_low: report.stats.ci_low,
        ci_high: report.stats.ci_high,
        yield_fraction: report.yield_fraction,
        histogram,
        breakdown: report.breakdown.into_iter().collect(),
    })
}

/// Allocates the unit cell, tiles a `rows × cols` lattice and counts frequency
/// collisions over `trials` fabricated samples. Returns JSON.
///
/// The first call builds the bound table, which takes a few seconds.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn qpu_mc(
    rows: usize,
    cols: usize,
    delta_q_mhz: f64,
    sigma_f_mhz: f64,
    x_ac: f64,
    f_threshold: f64,
    trials: u32,
    seed: u32,
) -> Result<String, JsError> {
    let r = qpu_mc_impl(rows, cols, delta_q_mhz, sigma_f_mhz, x_ac, f_threshold, trials, seed).map_err(js_err)?;
    serde_json::to_string(&r).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_has_one_value_per_grid_point() {
        let f = fidelity_curve_impl("1qg_vs_1qg_nn", 1.0, 1.0, 10.0).unwrap();
        assert_eq!(f.len(), 101);
        assert!(f.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
        assert!(f[100] > f[0]);
        assert!(fidelity_curve_impl("nope", 1.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn spectrum_peaks_at_the_tls() {
        let json = r#"[{"f_d_ghz": 5.0, "g_d_khz": 100.0, "gamma_per_us": 1.0}]"#;
        let g = tls_spectrum_impl(json, 0.02, 4.9, 5.1, 201).unwrap();
        let (imax, _) = g.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
        assert_eq!(imax, 100);
        assert!((g[0] - 0.02).abs() < 0.01);
        assert!(tls_spectrum_impl("[", 0.02, 4.9, 5.1, 10).is_err());
    }

    #[test]
    fn zero_spread_has_full_yield() {
        let r = qpu_mc_impl(3, 3, 104.0, 0.0, 0.02, 0.999, 20, 1).unwrap();
        assert_eq!(r.yield_fraction, 1.0);
        assert_eq!(r.histogram, vec![20]);
        assert_eq!(r.unit_cell_ghz.len(), 8);
        assert!(case_names().contains("iSWAP_vs_iSWAP_neighbor"));
    }
}
