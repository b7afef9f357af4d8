//! Swap-spectroscopy analysis: three-point T1 extraction, Lorentzian TLS
//! peaks, TLS census and Purcell-corrected quality factors.
//!
//! Qubit frequencies are in GHz, detunings in MHz, relaxation rates in µs⁻¹
//! and TLS couplings are quoted as g_d/2π in kHz. Inside the Lorentzian the
//! coupling and detuning are converted to angular rates (rad/µs) so that the
//! decoherence rate Γ enters with its plain µs⁻¹ value.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::trial_rng;

/// Default coupling threshold for the TLS census (kHz).
pub const DEFAULT_CENSUS_THRESHOLD_KHZ: f64 = 90.0;

/// One point of a swap-spectroscopy trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyPoint {
    pub f_ghz: f64,
    pub p1: f64,
    pub ps: f64,
    pub p0: f64,
}

/// A three-point swap-spectroscopy trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyTrace {
    pub points: Vec<SpectroscopyPoint>,
    /// Swap (interaction) time Ts (µs).
    pub swap_time_us: f64,
}

impl SpectroscopyTrace {
    /// Checks the population bounds and frequency ordering.
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            for v in [p.p1, p.ps, p.p0] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!(
                        "point {i}: population {v} outside [0, 1]"
                    )));
                }
            }
        }
        if self.points.windows(2).any(|w| w[1].f_ghz < w[0].f_ghz) {
            return Err(Error::InvalidParameter("trace points are not sorted by frequency".into()));
        }
        if !(self.swap_time_us > 0.0) {
            return Err(Error::InvalidParameter("swap time must be positive".into()));
        }
        Ok(())
    }

    /// Converts every point to a relaxation rate Γ1 = 1/T1.
    ///
    /// Points whose populations are out of order are returned as errors in
    /// the second vector (frequency, error) rather than aborting the trace.
    pub fn to_rates(&self) -> Result<(RateTrace, Vec<(f64, Error)>)> {
        self.validate()?;
        let mut f = Vec::new();
        let mut g = Vec::new();
        let mut bad = Vec::new();
        for p in &self.points {
            match three_point_t1(p.p1, p.ps, p.p0, self.swap_time_us) {
                Ok(t1) => {
                    f.push(p.f_ghz);
                    g.push(1.0 / t1);
                }
                Err(e) => bad.push((p.f_ghz, e)),
            }
        }
        Ok((RateTrace { f_ghz: f, gamma1_per_us: g }, bad))
    }
}

/// Relaxation rate versus qubit frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTrace {
    pub f_ghz: Vec<f64>,
    pub gamma1_per_us: Vec<f64>,
}

/// One TLS defect as seen by a qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsRecord {
    /// TLS frequency (GHz).
    pub f_d_ghz: f64,
    /// Coupling g_d/2π (kHz).
    pub g_d_khz: f64,
    /// TLS decoherence rate Γ (µs⁻¹).
    pub gamma_per_us: f64,
    /// Background qubit relaxation rate Γ_1Q (µs⁻¹).
    pub gamma_1q_per_us: f64,
}

impl TlsRecord {
    /// Angular coupling g_d in rad/µs.
    pub fn g_angular(&self) -> f64 {
        2.0 * PI * self.g_d_khz * 1e-3
    }

    /// Height of the Lorentzian above the background, `2 g_d²/Γ` (µs⁻¹).
    pub fn peak_height(&self) -> f64 {
        2.0 * self.g_angular().powi(2) / self.gamma_per_us
    }
}

/// Quality factors related by `1/Q = 1/Q_TLS + 1/Q_P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityFactors {
    pub q_measured: f64,
    pub q_purcell: f64,
    pub q_tls: f64,
}

/// T1 (µs) from the populations right after excitation (P1), after the swap
/// (Ps) and in the ground state (P0): `T1 = Ts / ln((P1−P0)/(Ps−P0))`.
pub fn three_point_t1(p1: f64, ps: f64, p0: f64, ts_us: f64) -> Result<f64> {
    if !(p1 > ps && ps > p0) {
        return Err(Error::NonPhysicalPopulations(format!(
            "expected P1 > Ps > P0, got P1={p1}, Ps={ps}, P0={p0}"
        )));
    }
    if !(ts_us > 0.0) {
        return Err(Error::InvalidParameter(format!("swap time must be positive, got {ts_us}")));
    }
    Ok(ts_us / ((p1 - p0) / (ps - p0)).ln())
}

/// Relaxation rate (µs⁻¹) of a qubit detuned by `delta_mhz` from one TLS:
/// `Γ1 = 2 g_d² Γ / (Γ² + δ²) + Γ_1Q`.
pub fn lorentzian_rate(delta_mhz: f64, tls: &TlsRecord) -> f64 {
    lorentzian_peak(delta_mhz, tls) + tls.gamma_1q_per_us
}

fn lorentzian_peak(delta_mhz: f64, tls: &TlsRecord) -> f64 {
    let d = 2.0 * PI * delta_mhz;
    let g = tls.g_angular();
    let gm = tls.gamma_per_us;
    2.0 * g * g * gm / (gm * gm + d * d)
}

/// Synthetic Γ1(f) for a set of TLSs on top of a background rate.
pub fn simulate_spectrum(tls: &[TlsRecord], gamma_1q_per_us: f64, grid_ghz: &[f64]) -> RateTrace {
    let gamma1 = grid_ghz
        .iter()
        .map(|&f| {
            gamma_1q_per_us
                + tls
                    .iter()
                    .map(|t| lorentzian_peak((f - t.f_d_ghz) * 1e3, t))
                    .sum::<f64>()
        })
        .collect();
    RateTrace {
        f_ghz: grid_ghz.to_vec(),
        gamma1_per_us: gamma1,
    }
}

/// Multiplies every rate by `1 + fraction · z` with independent standard
/// normal `z`, drawn from a stream keyed by `seed`.
pub fn add_relative_noise(trace: &RateTrace, fraction: f64, seed: u64) -> Result<RateTrace> {
    if !(fraction >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise fraction must be non-negative, got {fraction}")));
    }
    let mut rng = trial_rng(seed, "tls_spectrum_noise", 0);
    let gamma1 = trace
        .gamma1_per_us
        .iter()
        .map(|&g| {
            let z: f64 = StandardNormal.sample(&mut rng);
            g * (1.0 + fraction * z)
        })
        .collect();
    Ok(RateTrace {
        f_ghz: trace.f_ghz.clone(),
        gamma1_per_us: gamma1,
    })
}

/// Outcome of fitting one detected peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsFit {
    pub record: TlsRecord,
    /// Prominence of the detected maximum (µs⁻¹).
    pub prominence: f64,
    /// RMS residual of the local fit (µs⁻¹).
    pub residual_rms: f64,
    /// False when the local fit did not converge; the record then holds the
    /// initial estimate.
    pub converged: bool,
}

/// Options for [`fit_tls_peaks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakFitOptions {
    /// Minimum prominence (µs⁻¹). `None` selects the robust default of
    /// [`default_prominence`].
    pub min_prominence: Option<f64>,
    /// Minimum half-width of the local fit window in grid points. Wider
    /// peaks get a window of four half widths at half maximum on each side.
    pub half_window: usize,
}

impl Default for PeakFitOptions {
    fn default() -> Self {
        Self {
            min_prominence: None,
            half_window: 10,
        }
    }
}

/// Robust noise scale: 1.4826 × median absolute deviation from the median.
pub fn robust_sigma(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let med = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    1.4826 * median(&dev)
}

/// Default detection threshold: ten robust standard deviations of the trace.
///
/// [`fit_tls_peaks`] additionally requires ten times the relative noise of
/// the trace (see [`relative_noise`]) times the height of each maximum, so
/// that noise riding on a tall peak is not mistaken for further peaks.
pub fn default_prominence(values: &[f64]) -> f64 {
    10.0 * robust_sigma(values)
}

/// Robust estimate of the point-to-point relative noise of a trace: the
/// robust spread of `(y[k+1] − y[k]) / y[k]`, divided by √2.
pub fn relative_noise(values: &[f64]) -> f64 {
    let ratios: Vec<f64> = values
        .windows(2)
        .filter(|w| w[0] != 0.0)
        .map(|w| (w[1] - w[0]) / w[0].abs())
        .collect();
    robust_sigma(&ratios) / std::f64::consts::SQRT_2
}

/// Detects Lorentzian peaks in a Γ1(f) trace and fits each one locally.
///
/// Records come back sorted by TLS frequency. A flat trace yields no peaks.
pub fn fit_tls_peaks(trace: &RateTrace, opts: &PeakFitOptions) -> Result<Vec<TlsFit>> {
    let n = trace.f_ghz.len();
    if n != trace.gamma1_per_us.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} frequencies but {} rates",
            n,
            trace.gamma1_per_us.len()
        )));
    }
    if n < 10 {
        return Err(Error::InvalidParameter(format!(
            "trace needs at least 10 points, got {n}"
        )));
    }
    let y = &trace.gamma1_per_us;
    let required: Box<dyn Fn(usize) -> f64> = match opts.min_prominence {
        Some(t) => Box::new(move |_| t),
        None => {
            let floor = default_prominence(y);
            let rel = relative_noise(y);
            Box::new(move |i| floor.max(10.0 * rel * y[i].abs()))
        }
    };
    let peaks: Vec<(usize, f64)> = find_peaks(y)
        .into_iter()
        .filter(|&(i, p)| p > required(i) && p > 0.0)
        .collect();
    let baseline = median(y);
    let mut fits = Vec::with_capacity(peaks.len());
    for (k, &(i, prom)) in peaks.iter().enumerate() {
        let reach = opts.half_window.max(4 * half_width_points(y, i, baseline));
        let mut lo = i.saturating_sub(reach);
        let mut hi = (i + reach).min(n - 1);
        if k > 0 {
            lo = lo.max((peaks[k - 1].0 + i).div_ceil(2));
        }
        if k + 1 < peaks.len() {
            hi = hi.min((peaks[k + 1].0 + i) / 2);
        }
        fits.push(fit_one_peak(&trace.f_ghz[lo..=hi], &y[lo..=hi], i - lo, baseline, prom));
    }
    fits.sort_by(|a, b| a.record.f_d_ghz.total_cmp(&b.record.f_d_ghz));
    Ok(fits)
}

/// Number of grid points from `peak` to where the trace first falls below
/// half its height above `baseline`, the smaller of the two sides.
fn half_width_points(y: &[f64], peak: usize, baseline: f64) -> usize {
    let half = baseline + (y[peak] - baseline) / 2.0;
    let left = (0..peak).rev().position(|k| y[k] <= half).map_or(peak, |d| d + 1);
    let right = (peak + 1..y.len()).position(|k| y[k] <= half).map_or(y.len() - 1 - peak, |d| d + 1);
    left.min(right)
}

/// Local maxima with their topographic prominence.
fn find_peaks(y: &[f64]) -> Vec<(usize, f64)> {
    let n = y.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            // Walk across a plateau, if any.
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let peak = (i + j) / 2;
                let h = y[peak];
                let mut left_min = h;
                for k in (0..i).rev() {
                    if y[k] > h {
                        break;
                    }
                    left_min = left_min.min(y[k]);
                }
                let mut right_min = h;
                for &v in &y[j + 1..] {
                    if v > h {
                        break;
                    }
                    right_min = right_min.min(v);
                }
                out.push((peak, h - left_min.max(right_min)));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Model `y = A Γ²/(Γ² + δ²) + c` with δ = 2π·1000·(f − f_d) rad/µs.
/// Parameters are (f_d, A, Γ, c).
fn model(f: f64, p: &Vector4<f64>) -> (f64, Vector4<f64>) {
    let (fd, a, gm, c) = (p[0], p[1], p[2], p[3]);
    let k = 2.0 * PI * 1e3;
    let d = k * (f - fd);
    let den = gm * gm + d * d;
    let shape = gm * gm / den;
    let val = a * shape + c;
    let d_fd = a * gm * gm * 2.0 * d * k / (den * den);
    let d_gm = a * 2.0 * gm * d * d / (den * den);
    (val, Vector4::new(d_fd, shape, d_gm, 1.0))
}

fn fit_one_peak(f: &[f64], y: &[f64], centre: usize, baseline: f64, prominence: f64) -> TlsFit {
    let m = f.len();
    let c0 = baseline.min(y.iter().cloned().fold(f64::INFINITY, f64::min));
    let a0 = (y[centre] - c0).max(f64::MIN_POSITIVE);
    // Half width at half maximum from the samples, as an initial Γ.
    let half = c0 + a0 / 2.0;
    let mut l = centre;
    while l > 0 && y[l] > half {
        l -= 1;
    }
    let mut r = centre;
    while r + 1 < m && y[r] > half {
        r += 1;
    }
    let hwhm_ghz = ((f[r] - f[l]) / 2.0).max(f.get(1).map_or(1e-4, |x| (x - f[0]).abs()) / 2.0);
    let gamma0 = 2.0 * PI * 1e3 * hwhm_ghz;
    let mut p = Vector4::new(f[centre], a0, gamma0, c0);
    let initial = p;

    let sse = |p: &Vector4<f64>| -> f64 { f.iter().zip(y).map(|(&x, &v)| (model(x, p).0 - v).powi(2)).sum() };
    let mut cost = sse(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..200 {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (&x, &v) in f.iter().zip(y) {
            let (val, grad) = model(x, &p);
            jtj += grad * grad.transpose();
            jtr += grad * (v - val);
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for d in 0..4 {
                damped[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let trial_cost = if trial[1] > 0.0 && trial[2] > 0.0 { sse(&trial) } else { f64::INFINITY };
            if trial_cost < cost {
                let rel = (cost - trial_cost) / cost.max(1e-300);
                let small_step = (0..4).all(|d| step[d].abs() <= 1e-10 * p[d].abs().max(1e-12));
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < 1e-12 || small_step {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No descent direction left: at a minimum to working precision.
            converged = lambda > 1e8;
            break;
        }
        if converged {
            break;
        }
    }
    let fin = if converged { p } else { initial };
    let gamma = fin[2];
    let g_ang = (fin[1] * gamma / 2.0).sqrt();
    TlsFit {
        record: TlsRecord {
            f_d_ghz: fin[0],
            g_d_khz: g_ang / (2.0 * PI) * 1e3,
            gamma_per_us: gamma,
            gamma_1q_per_us: fin[3],
        },
        prominence,
        residual_rms: (sse(&fin) / m as f64).sqrt(),
        converged,
    }
}

/// Cumulative count of TLSs above a coupling threshold versus frequency.
///
/// Returns `(f, count)` steps at every qualifying TLS frequency inside
/// `[f_lo, f_hi]`, prefixed by `(f_lo, 0)`.
pub fn tls_census(records: &[TlsRecord], g_threshold_khz: f64, f_lo_ghz: f64, f_hi_ghz: f64) -> Vec<(f64, usize)> {
    let mut fs: Vec<f64> = records
        .iter()
        .filter(|r| r.g_d_khz > g_threshold_khz && r.f_d_ghz >= f_lo_ghz && r.f_d_ghz <= f_hi_ghz)
        .map(|r| r.f_d_ghz)
        .collect();
    fs.sort_by(|a, b| a.total_cmp(b));
    let mut out = vec![(f_lo_ghz, 0)];
    out.extend(fs.into_iter().enumerate().map(|(i, f)| (f, i + 1)));
    out
}

/// Expected number of junction TLSs: density × qubits × junction area.
pub fn expected_junction_tls(n_qubits: f64, rho_per_ghz_um2: f64, area_um2: f64) -> f64 {
    n_qubits * rho_per_ghz_um2 * area_um2
}

/// Separates the Purcell contribution from a measured T1.
///
/// `T1^P = Δ²/(κ g01²) · ω_r/ω_q` with Δ, κ and g01 as angular rates;
/// `Q_P = ω_q T1^P`, `Q = ω_q T1`, and `1/Q_TLS = 1/Q − 1/Q_P`.
pub fn purcell_correction(
    t1_us: f64,
    kappa_mhz: f64,
    g01_mhz: f64,
    delta_mhz: f64,
    omega_r_ghz: f64,
    omega_q_ghz: f64,
) -> Result<QualityFactors> {
    for (name, v) in [
        ("T1", t1_us),
        ("kappa", kappa_mhz),
        ("g01", g01_mhz),
        ("detuning", delta_mhz),
        ("resonator frequency", omega_r_ghz),
        ("qubit frequency", omega_q_ghz),
    ] {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let to_ang = |mhz: f64| 2.0 * PI * mhz; // rad/µs
    let t1p = to_ang(delta_mhz).powi(2) / (to_ang(kappa_mhz) * to_ang(g01_mhz).powi(2)) * (omega_r_ghz / omega_q_ghz);
    let wq = 2.0 * PI * omega_q_ghz * 1e3; // rad/µs
    let q_purcell = wq * t1p;
    let q_measured = wq * t1_us;
    quality_from(q_measured, q_purcell)
}

/// Q_TLS from a measured Q and a Purcell limit Q_P.
pub fn quality_from(q_measured: f64, q_purcell: f64) -> Result<QualityFactors> {
    if !(q_measured < q_purcell) {
        return Err(Error::InconsistentInputs(format!(
            "measured Q {q_measured:.4e} is not below the Purcell limit {q_purcell:.4e}"
        )));
    }
    let q_tls = if q_purcell.is_infinite() {
        q_measured
    } else {
        1.0 / (1.0 / q_measured - 1.0 / q_purcell)
    };
    Ok(QualityFactors {
        q_measured,
        q_purcell,
        q_tls,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tls(f: f64, g: f64, inv_gamma_ns: f64) -> TlsRecord {
        TlsRecord {
            f_d_ghz: f,
            g_d_khz: g,
            gamma_per_us: 1e3 / inv_gamma_ns,
            gamma_1q_per_us: 0.01,
        }
    }

    #[test]
    fn three_point_examples() {
        let e = std::f64::consts::E;
        assert!((three_point_t1(0.9, 0.1 + 0.8 / e, 0.1, 7.0).unwrap() - 7.0).abs() < 1e-12);
        let t = three_point_t1(1.0, 0.5, 0.0, 10.0).unwrap();
        assert!((t - 10.0 / 2f64.ln()).abs() < 1e-12);
        assert!((t - 14.43).abs() < 0.01);
        assert!(three_point_t1(1.0, 1e-12, 0.0, 10.0).unwrap() < 0.5);
        assert!(matches!(
            three_point_t1(0.5, 0.6, 0.0, 1.0),
            Err(Error::NonPhysicalPopulations(_))
        ));
    }

    #[test]
    fn lorentzian_limits() {
        let t = tls(4.5, 200.0, 100.0);
        assert!((lorentzian_rate(1e9, &t) - t.gamma_1q_per_us).abs() < 1e-12);
        assert!((lorentzian_rate(0.0, &t) - (t.peak_height() + t.gamma_1q_per_us)).abs() < 1e-15);
        // δ equal to Γ in angular units halves the peak.
        let half_mhz = t.gamma_per_us / (2.0 * PI);
        let h = lorentzian_rate(half_mhz, &t) - t.gamma_1q_per_us;
        assert!((h - t.peak_height() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn flat_trace_has_no_peaks() {
        let grid: Vec<f64> = (0..200).map(|i| 4.0 + i as f64 * 1e-3).collect();
        let tr = simulate_spectrum(&[], 0.02, &grid);
        assert!(tr.gamma1_per_us.iter().all(|&v| v == 0.02));
        assert!(fit_tls_peaks(&tr, &PeakFitOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn noiseless_single_peak_fit_is_exact() {
        let grid: Vec<f64> = (0..400).map(|i| 4.4 + i as f64 * 2e-4).collect();
        let truth = tls(4.44, 150.0, 100.0);
        let tr = simulate_spectrum(&[truth], 0.01, &grid);
        let fits = fit_tls_peaks(&tr, &PeakFitOptions { min_prominence: Some(1e-4), half_window: 10 }).unwrap();
        assert_eq!(fits.len(), 1);
        let r = fits[0].record;
        assert!(fits[0].converged);
        assert!((r.f_d_ghz - 4.44).abs() < 1e-9);
        assert!((r.g_d_khz - 150.0).abs() / 150.0 < 1e-6);
        assert!((r.gamma_per_us - 10.0).abs() / 10.0 < 1e-6);
    }

    #[test]
    fn census_counts_and_threshold() {
        let recs = [tls(4.1, 50.0, 100.0), tls(4.2, 95.0, 100.0), tls(4.3, 300.0, 100.0)];
        let c = tls_census(&recs, 90.0, 4.0, 5.0);
        assert_eq!(c.last().unwrap().1, 2);
        assert_eq!(tls_census(&recs, 1000.0, 4.0, 5.0), vec![(4.0, 0)]);
        assert!((expected_junction_tls(2.0, 1.5, 0.044) - 0.132).abs() < 1e-12);
    }

    #[test]
    fn purcell_examples() {
        let q = quality_from(1.7e6, 1.0 / (1.0 / 1.7e6 - 1.0 / 2.7e6)).unwrap();
        assert!((q.q_purcell - 4.59e6).abs() / 4.59e6 < 1e-3);
        assert!((q.q_tls - 2.7e6).abs() / 2.7e6 < 1e-12);
        let inf = quality_from(1.7e6, f64::INFINITY).unwrap();
        assert_eq!(inf.q_tls, 1.7e6);
        let a = purcell_correction(50.0, 1.0, 50.0, 1500.0, 6.5, 4.5).unwrap();
        let b = purcell_correction(50.0, 0.5, 50.0, 1500.0, 6.5, 4.5).unwrap();
        assert!((b.q_purcell / a.q_purcell - 2.0).abs() < 1e-12);
        assert!(quality_from(5e6, 4e6).is_err());
    }
}
