//! Josephson-junction resistance statistics and their propagation to qubit
//! frequencies.
//!
//! Widths are in µm, areas in µm², resistances in Ω and frequencies in GHz
//! unless a name says otherwise.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::device_model::PhysicalConstants;
use crate::error::{Error, Result};

/// Default resistance above which a junction is treated as an open circuit (Ω).
pub const DEFAULT_OPEN_CIRCUIT_OHM: f64 = 1.0e6;

/// One room-temperature probe measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionSample {
    pub die_row: i32,
    pub die_col: i32,
    /// Designed junction width d (µm).
    pub width_um: f64,
    /// Normal-state resistance (Ω).
    pub r_n_ohm: f64,
    /// Measurement day offset.
    pub day: i32,
}

/// All samples measured on one wafer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaferMap {
    pub samples: Vec<JunctionSample>,
    /// Die pitch (mm).
    pub die_pitch_mm: f64,
    pub wafer_label: String,
}

impl WaferMap {
    pub fn new(samples: Vec<JunctionSample>, wafer_label: impl Into<String>) -> Self {
        Self {
            samples,
            die_pitch_mm: 5.0,
            wafer_label: wafer_label.into(),
        }
    }

    /// Distinct designed widths, ascending.
    pub fn widths(&self) -> Vec<f64> {
        distinct_sorted(self.samples.iter().map(|s| s.width_um))
    }

    /// Distinct measurement days, ascending.
    pub fn days(&self) -> Vec<i32> {
        self.samples
            .iter()
            .map(|s| s.day)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// `R_N = R_J / (d − Δd)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistanceModel {
    /// Unit-area resistance (Ω·µm²).
    pub r_j: f64,
    /// Lithographic width bias (nm).
    pub delta_d_nm: f64,
    /// RMS of the fit residual in `R_N^{-1/2}`, relative to the mean ordinate.
    pub residual_rms: f64,
}

impl ResistanceModel {
    /// Predicted resistance of a junction with designed width `width_um`.
    pub fn resistance(&self, width_um: f64) -> f64 {
        let eff = width_um - self.delta_d_nm * 1e-3;
        self.r_j / (eff * eff)
    }

    /// Effective junction area (d − Δd)² in µm².
    pub fn effective_area(&self, width_um: f64) -> f64 {
        let eff = width_um - self.delta_d_nm * 1e-3;
        eff * eff
    }
}

/// `CV_RN² = CV_RJ²·CV_A² + CV_RJ² + CV_A²` with `CV_A = 2σ_d/√A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvModel {
    /// Relative spread of the unit-area resistance (fraction).
    pub cv_rj: f64,
    /// Standard deviation of the junction side length (nm).
    pub sigma_d_nm: f64,
}

impl CvModel {
    /// Area-induced coefficient of variation for a junction of area `area_um2`.
    pub fn cv_area(&self, area_um2: f64) -> f64 {
        2.0 * self.sigma_d_nm * 1e-3 / area_um2.sqrt()
    }

    /// Predicted CV of R_N for a junction of area `area_um2`.
    pub fn cv_rn(&self, area_um2: f64) -> f64 {
        let a = self.cv_area(area_um2);
        let c = self.cv_rj;
        (c * c * a * a + c * c + a * a).sqrt()
    }
}

/// Splits samples into kept ones and open circuits above `threshold_ohm`.
pub fn split_open_circuits(
    samples: &[JunctionSample],
    threshold_ohm: f64,
) -> (Vec<JunctionSample>, Vec<JunctionSample>) {
    samples
        .iter()
        .partition(|s| s.r_n_ohm.is_finite() && s.r_n_ohm > 0.0 && s.r_n_ohm <= threshold_ohm)
}

/// Least-squares fit of the mean `R_N^{-1/2}` per width against `d`.
///
/// The linearised model is `R_N^{-1/2} = (d − Δd)/√R_J`. Samples must already
/// be free of open circuits (see [`split_open_circuits`]).
pub fn fit_resistance_model(samples: &[JunctionSample]) -> Result<ResistanceModel> {
    let mut by_width: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for s in samples {
        if !(s.r_n_ohm > 0.0) || !(s.width_um > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample at die ({},{}) has non-positive width or resistance",
                s.die_row, s.die_col
            )));
        }
        by_width
            .entry(s.width_um.to_bits())
            .or_insert_with(|| (s.width_um, Vec::new()))
            .1
            .push(s.r_n_ohm.powf(-0.5));
    }
    if by_width.len() < 2 {
        return Err(Error::UnderdeterminedFit(format!(
            "need at least 2 distinct widths, found {}",
            by_width.len()
        )));
    }
    let points: Vec<(f64, f64)> = by_width
        .values()
        .map(|(d, ys)| (*d, ys.iter().sum::<f64>() / ys.len() as f64))
        .collect();
    let (slope, intercept) = linear_fit(&points)?;
    if !(slope > 0.0) {
        return Err(Error::InconsistentInputs(
            "R_N^-1/2 does not increase with junction width".into(),
        ));
    }
    let r_j = 1.0 / (slope * slope);
    let delta_d_um = -intercept / slope;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss: f64 = points
        .iter()
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let residual_rms = (ss / points.len() as f64).sqrt() / mean_y;
    Ok(ResistanceModel {
        r_j,
        delta_d_nm: delta_d_um * 1e3,
        residual_rms,
    })
}

/// Least-squares fit of observed `(area µm², CV_RN)` pairs to the CV model.
///
/// With `u = CV_RJ²` and `v = 4σ_d²` the model reads `CV_RN² = u + v(1+u)/A`,
/// which is linear in `(u, w = v(1+u))`; the fit is solved exactly in that
/// parametrisation and mapped back.
pub fn fit_cv_model(observations: &[(f64, f64)]) -> Result<CvModel> {
    let areas = distinct_sorted(observations.iter().map(|o| o.0));
    if areas.len() < 2 {
        return Err(Error::UnderdeterminedFit(format!(
            "need at least 2 distinct areas, found {}",
            areas.len()
        )));
    }
    if observations.iter().any(|(a, cv)| !(*a > 0.0) || !(*cv >= 0.0)) {
        return Err(Error::InvalidParameter(
            "areas must be positive and CVs non-negative".into(),
        ));
    }
    let points: Vec<(f64, f64)> = observations
        .iter()
        .map(|(a, cv)| (1.0 / a, cv * cv))
        .collect();
    let (mut w, mut u) = linear_fit(&points)?;
    if u < 0.0 {
        u = 0.0;
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        w = (sxy / sxx).max(0.0);
    } else if w < 0.0 {
        w = 0.0;
        u = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    }
    let v = w / (1.0 + u);
    Ok(CvModel {
        cv_rj: u.sqrt(),
        sigma_d_nm: v.sqrt() / 2.0 * 1e3,
    })
}

/// Qubit frequency (GHz) from `h f01 = √(2ΔΦ₀E_C/(e R_N)) − E_C`.
pub fn transmon_frequency(r_n_ohm: f64, e_c_mhz: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(r_n_ohm > 0.0) || !(e_c_mhz > 0.0) || !(consts.delta_gap_uev > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "R_N ({r_n_ohm} Ω), E_C ({e_c_mhz} MHz) and gap must be positive"
        )));
    }
    let h = consts.planck();
    let ec_j = h * e_c_mhz * 1e6;
    let inner = 2.0 * consts.delta_gap_joule() * consts.flux_quantum() * ec_j
        / (consts.electron_charge() * r_n_ohm);
    Ok((inner.sqrt() - ec_j) / h * 1e-9)
}

/// Frequency spread (MHz) implied by a resistance CV: `σ_f = CV·f/2`.
pub fn frequency_stdev(f01_ghz: f64, cv_rn: f64) -> Result<f64> {
    if !(cv_rn >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "CV must be non-negative, got {cv_rn}"
        )));
    }
    Ok(0.5 * cv_rn * f01_ghz * 1e3)
}

/// Sample coefficient of variation (n−1 denominator). `None` for fewer than 2 values.
pub fn coefficient_of_variation(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some(var.sqrt() / mean)
}

/// CV of one k×k window of dies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCv {
    /// Top-left die of the window.
    pub die_row: i32,
    pub die_col: i32,
    pub n_samples: usize,
    pub cv: f64,
}

/// All window CVs plus their summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub windows: Vec<WindowCv>,
    pub mean_cv: f64,
    pub min_cv: f64,
    pub max_cv: f64,
}

/// Coefficient of variation over every fully populated `k×k` window of dies.
///
/// Only samples of designed width `width_um` (matched to 1e-9 µm) and, if
/// given, measured on `day` enter. A die counts as populated when it holds at
/// least one such sample.
pub fn chip_window_cv(
    wafer: &WaferMap,
    k: usize,
    width_um: f64,
    day: Option<i32>,
) -> Result<WindowSummary> {
    if k == 0 {
        return Err(Error::InvalidParameter("window size must be at least 1".into()));
    }
    let mut per_die: BTreeMap<(i32, i32), Vec<f64>> = BTreeMap::new();
    for s in &wafer.samples {
        if (s.width_um - width_um).abs() < 1e-9 && day.map_or(true, |d| d == s.day) {
            per_die.entry((s.die_row, s.die_col)).or_default().push(s.r_n_ohm);
        }
    }
    let k = k as i32;
    let mut windows = Vec::new();
    for &(r0, c0) in per_die.keys() {
        let mut vals = Vec::new();
        let mut full = true;
        'outer: for dr in 0..k {
            for dc in 0..k {
                match per_die.get(&(r0 + dr, c0 + dc)) {
                    Some(v) => vals.extend_from_slice(v),
                    None => {
                        full = false;
                        break 'outer;
                    }
                }
            }
        }
        if full {
            if let Some(cv) = coefficient_of_variation(&vals) {
                windows.push(WindowCv {
                    die_row: r0,
                    die_col: c0,
                    n_samples: vals.len(),
                    cv,
                });
            }
        }
    }
    if windows.is_empty() {
        return Err(Error::EmptyResult(format!(
            "no {k}x{k} window of populated dies for width {width_um} µm"
        )));
    }
    let cvs: Vec<f64> = windows.iter().map(|w| w.cv).collect();
    Ok(WindowSummary {
        mean_cv: cvs.iter().sum::<f64>() / cvs.len() as f64,
        min_cv: cvs.iter().cloned().fold(f64::INFINITY, f64::min),
        max_cv: cvs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        windows,
    })
}

/// Aging statistics for one designed width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingEntry {
    pub width_um: f64,
    pub area_um2: f64,
    /// Mean of `(R(t_last) − R(t_first))/R(t_first)` over matched junctions.
    pub mean_relative_change: f64,
    pub matched: usize,
    /// CV of R_N on each measurement day.
    pub cv_by_day: Vec<(i32, f64)>,
}

/// Result of [`aging_deltas`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingReport {
    pub first_day: Option<i32>,
    pub last_day: Option<i32>,
    pub entries: Vec<AgingEntry>,
    /// Samples from the first or last day without a partner on the other day.
    pub unmatched: Vec<JunctionSample>,
}

/// Relative resistance change between the first and last measurement days.
///
/// Junctions are matched by `(die_row, die_col, width)`; repeated junctions
/// of the same key pair up in order of appearance.
pub fn aging_deltas(wafer: &WaferMap) -> AgingReport {
    let days = wafer.days();
    if days.len() < 2 {
        return AgingReport {
            first_day: days.first().copied(),
            last_day: days.last().copied(),
            entries: vec![],
            unmatched: wafer.samples.clone(),
        };
    }
    let (t1, t2) = (days[0], *days.last().unwrap());
    type Key = (i32, i32, u64);
    let mut first: HashMap<Key, Vec<JunctionSample>> = HashMap::new();
    let mut last: HashMap<Key, Vec<JunctionSample>> = HashMap::new();
    for s in &wafer.samples {
        let key = (s.die_row, s.die_col, s.width_um.to_bits());
        if s.day == t1 {
            first.entry(key).or_default().push(*s);
        } else if s.day == t2 {
            last.entry(key).or_default().push(*s);
        }
    }
    let mut rel: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut unmatched = Vec::new();
    let mut keys: Vec<Key> = first.keys().chain(last.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    for key in keys {
        let a = first.get(&key).map(Vec::as_slice).unwrap_or(&[]);
        let b = last.get(&key).map(Vec::as_slice).unwrap_or(&[]);
        let n = a.len().min(b.len());
        for i in 0..n {
            rel.entry(key.2)
                .or_default()
                .push((b[i].r_n_ohm - a[i].r_n_ohm) / a[i].r_n_ohm);
        }
        unmatched.extend_from_slice(&a[n..]);
        unmatched.extend_from_slice(&b[n..]);
    }
    let entries = rel
        .into_iter()
        .map(|(bits, changes)| {
            let width = f64::from_bits(bits);
            let cv_by_day = days
                .iter()
                .filter_map(|&d| {
                    let vals: Vec<f64> = wafer
                        .samples
                        .iter()
                        .filter(|s| s.day == d && s.width_um.to_bits() == bits)
                        .map(|s| s.r_n_ohm)
                        .collect();
                    coefficient_of_variation(&vals).map(|cv| (d, cv))
                })
                .collect();
            AgingEntry {
                width_um: width,
                area_um2: width * width,
                mean_relative_change: changes.iter().sum::<f64>() / changes.len() as f64,
                matched: changes.len(),
                cv_by_day,
            }
        })
        .collect();
    AgingReport {
        first_day: Some(t1),
        last_day: Some(t2),
        entries,
        unmatched,
    }
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| a.to_bits() == b.to_bits());
    v
}

/// Ordinary least-squares line `y = slope·x + intercept`.
fn linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::UnderdeterminedFit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
