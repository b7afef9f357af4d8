//! Minimum safe detunings per collision case, coupling fraction and fidelity
//! threshold, obtained by scanning `F(Δ)` on a uniform grid.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gate_dynamics::{catalog, CaseEvaluator, CollisionCase, PropagationMethod};
use crate::sampling::map_indexed;

/// Fidelity thresholds tabulated by [`build_tables`].
pub const THRESHOLDS: [f64; 3] = [0.99, 0.999, 0.9999];

/// Number of tabulated coupling fractions, `0.1, 0.2, …, 1.0`.
pub const N_G_FRACTIONS: usize = 10;

/// The tabulated coupling fractions of `g_wcs`.
pub fn g_fractions() -> [f64; N_G_FRACTIONS] {
    std::array::from_fn(|k| (k + 1) as f64 / 10.0)
}

/// How the scan turns an oscillating `F(Δ)` into a single bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingRule {
    /// Smallest grid detuning at which `F ≥ threshold`.
    #[default]
    First,
    /// Smallest grid detuning beyond which `F ≥ threshold` everywhere on the grid.
    Last,
}

/// Scan settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub grid_step_mhz: f64,
    pub delta_max_ghz: f64,
    pub rule: CrossingRule,
    pub method: PropagationMethod,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            grid_step_mhz: 1.0,
            delta_max_ghz: 2.5,
            rule: CrossingRule::First,
            method: PropagationMethod::Frame,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step_mhz > 0.0) || !(self.delta_max_ghz > 0.0) {
            return Err(Error::InvalidParameter(
                "grid step and maximum detuning must be positive".into(),
            ));
        }
        if self.grid_step_mhz * 1e-3 > self.delta_max_ghz {
            return Err(Error::InvalidParameter("grid step exceeds the scan range".into()));
        }
        Ok(())
    }

    /// Number of grid points, including both ends.
    pub fn n_points(&self) -> usize {
        (self.delta_max_ghz * 1e3 / self.grid_step_mhz + 1e-9).floor() as usize + 1
    }

    /// Detuning of grid point `i` (GHz).
    pub fn delta_at(&self, i: usize) -> f64 {
        i as f64 * self.grid_step_mhz / 1e3
    }
}

/// `F(Δ)` on the scan grid for colliding strength `g_fraction · g_wcs`.
pub fn fidelity_curve(eval: &CaseEvaluator, g_fraction: f64, cfg: &ScanConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let g = g_fraction * eval.case.g_wcs;
    (0..cfg.n_points())
        .map(|i| eval.fidelity(cfg.delta_at(i), g))
        .collect()
}

/// Grid index of the bound on a sampled curve, or `None` when no safe
/// detuning exists on the grid.
pub fn crossing_index(curve: &[f64], threshold: f64, rule: CrossingRule) -> Option<usize> {
    match rule {
        CrossingRule::First => curve.iter().position(|&f| f >= threshold),
        CrossingRule::Last => {
            let last_bad = curve.iter().rposition(|&f| f < threshold);
            match last_bad {
                None => Some(0),
                Some(i) if i + 1 < curve.len() => Some(i + 1),
                Some(_) => None,
            }
        }
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fidelity threshold must lie in (0, 1), got {threshold}"
        )));
    }
    Ok(())
}

/// Minimum safe detuning (GHz) of one case at one coupling fraction.
pub fn minimum_detuning(case: &CollisionCase, g_fraction: f64, threshold: f64, cfg: &ScanConfig) -> Result<f64> {
    check_threshold(threshold)?;
    if !(0.0..=1.0).contains(&g_fraction) {
        return Err(Error::InvalidParameter(format!(
            "coupling fraction must lie in [0, 1], got {g_fraction}"
        )));
    }
    let eval = CaseEvaluator::new(case.clone(), cfg.method)?;
    let curve = fidelity_curve(&eval, g_fraction, cfg)?;
    crossing_index(&curve, threshold, cfg.rule)
        .map(|i| cfg.delta_at(i))
        .ok_or_else(|| Error::BoundNotFound {
            case: case.name.clone(),
            g_fraction,
            threshold,
            delta_max_ghz: cfg.delta_max_ghz,
        })
}

/// One tabulated bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub case: String,
    pub g_fraction: f64,
    pub threshold: f64,
    pub delta_min_ghz: f64,
}

/// Bounds for every case, tabulated coupling fraction and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub config: ScanConfig,
    /// Digest of the scan configuration and case catalog the table was built from.
    pub config_hash: String,
    pub entries: Vec<BoundEntry>,
}

/// Version of the table-building algorithm; part of every config hash so that
/// tables cached by an older build are rebuilt.
pub const TABLE_FORMAT_VERSION: u32 = 2;

/// SHA-256 digest (hex) of the scan configuration, the case catalog and the
/// table format version.
pub fn config_hash(cfg: &ScanConfig) -> String {
    let payload = serde_json::to_vec(&(TABLE_FORMAT_VERSION, cfg, catalog())).expect("scan config serializes");
    let digest = Sha256::digest(&payload);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn threshold_index(threshold: f64) -> Option<usize> {
    THRESHOLDS.iter().position(|&t| (t - threshold).abs() < 1e-12)
}

/// Computes the full table of `13 × 10 × 3` bounds.
///
/// Each (case, coupling fraction) curve is evaluated once and shared by the
/// three thresholds; curves are computed in parallel.
pub fn build_tables(cfg: &ScanConfig) -> Result<BoundTable> {
    cfg.validate()?;
    let cases = catalog();
    let evaluators = cases
        .iter()
        .map(|c| CaseEvaluator::new(c.clone(), cfg.method))
        .collect::<Result<Vec<_>>>()?;
    let fr = g_fractions();
    let n_cells = (cases.len() * N_G_FRACTIONS) as u64;
    let cells = map_indexed(n_cells, |k| -> Result<Vec<BoundEntry>> {
        let ci = k as usize / N_G_FRACTIONS;
        let gf = fr[k as usize % N_G_FRACTIONS];
        let curve = fidelity_curve(&evaluators[ci], gf, cfg)?;
        THRESHOLDS
            .iter()
            .map(|&thr| {
                let i = crossing_index(&curve, thr, cfg.rule).ok_or_else(|| Error::BoundNotFound {
                    case: cases[ci].name.clone(),
                    g_fraction: gf,
                    threshold: thr,
                    delta_max_ghz: cfg.delta_max_ghz,
                })?;
                Ok(BoundEntry {
                    case: cases[ci].name.clone(),
                    g_fraction: gf,
                    threshold: thr,
                    delta_min_ghz: cfg.delta_at(i),
                })
            })
            .collect()
    });
    let mut entries = Vec::with_capacity(cases.len() * N_G_FRACTIONS * THRESHOLDS.len());
    for cell in cells {
        entries.extend(cell?);
    }
    Ok(BoundTable {
        config: *cfg,
        config_hash: config_hash(cfg),
        entries,
    })
}

impl BoundTable {
    /// True when the table was built from `cfg` and the current catalog.
    pub fn matches(&self, cfg: &ScanConfig) -> bool {
        self.config == *cfg && self.config_hash == config_hash(cfg)
    }

    /// Tabulated bound at an exact grid fraction and tabulated threshold.
    pub fn get(&self, case: &str, g_fraction: f64, threshold: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|e| e.case == case && (e.g_fraction - g_fraction).abs() < 1e-9 && (e.threshold - threshold).abs() < 1e-12)
            .map(|e| e.delta_min_ghz)
            .ok_or_else(|| {
                Error::MissingBound(format!("{case} at g = {g_fraction} g_wcs, F > {threshold}"))
            })
    }

    /// Row of bounds for one case across the tabulated fractions.
    pub fn row(&self, case: &str, threshold: f64) -> Result<[f64; N_G_FRACTIONS]> {
        let fr = g_fractions();
        let mut out = [0.0; N_G_FRACTIONS];
        for (k, g) in fr.iter().enumerate() {
            out[k] = self.get(case, *g, threshold)?;
        }
        Ok(out)
    }

    /// Case names present in the table, in catalog order.
    pub fn cases(&self) -> Vec<String> {
        let mut out: Vec<String> = vec![];
        for e in &self.entries {
            if !out.contains(&e.case) {
                out.push(e.case.clone());
            }
        }
        out
    }

    /// Long-format CSV: one line per entry.
    pub fn to_long_csv(&self) -> String {
        let mut s = String::from("case,g_fraction,threshold,delta_min_ghz\n");
        for e in &self.entries {
            let _ = writeln!(s, "{},{:.1},{},{:.4}", e.case, e.g_fraction, e.threshold, e.delta_min_ghz);
        }
        s
    }
}

/// Crosstalk-scaled bound (GHz) for `case` at crosstalk fraction `x_ac`.
///
/// Same-coupler cases ignore `x_ac` and use the full worst-case strength.
/// Between tabulated fractions the bound is interpolated linearly; below the
/// first row it is interpolated towards zero bound at zero coupling.
pub fn bound_for(table: &BoundTable, case: &CollisionCase, x_ac: f64, threshold: f64) -> Result<f64> {
    check_threshold(threshold)?;
    if threshold_index(threshold).is_none() {
        return Err(Error::MissingBound(format!("threshold {threshold} is not tabulated")));
    }
    if !(0.0..=1.0).contains(&x_ac) {
        return Err(Error::InvalidParameter(format!("crosstalk fraction must lie in [0, 1], got {x_ac}")));
    }
    if case.same_coupler {
        return table.get(&case.name, 1.0, threshold);
    }
    let row = table.row(&case.name, threshold)?;
    Ok(interpolate_row(&row, x_ac))
}

/// Linear interpolation over `(0, 0), (0.1, row[0]), …, (1.0, row[9])`.
pub fn interpolate_row(row: &[f64; N_G_FRACTIONS], x: f64) -> f64 {
    let pos = (x * 10.0).clamp(0.0, 10.0);
    let k = (pos.floor() as usize).min(N_G_FRACTIONS - 1);
    let lo = if k == 0 { 0.0 } else { row[k - 1] };
    let hi = row[k];
    lo + (pos - k as f64) * (hi - lo)
}

/// A group of cases reported together, taking the largest bound of the group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportTable {
    pub name: &'static str,
    pub title: &'static str,
    pub cases: &'static [&'static str],
}

/// The ten published table layouts and the cases each one summarises.
pub const REPORT_TABLES: [ReportTable; 10] = [
    ReportTable {
        name: "single_qubit",
        title: "Single-qubit gate collisions",
        cases: &["1qg_vs_1qg_nn", "1qg_vs_1qg_nnn"],
    },
    ReportTable {
        name: "CZ_CZ_same",
        title: "CZ vs CZ on the same coupler",
        cases: &["CZ02_vs_CZ20_same_coupler"],
    },
    ReportTable {
        name: "colliding_iSWAP_desired_CZ_same",
        title: "CZ disturbed by iSWAP on the same coupler",
        cases: &["CZ_vs_iSWAP_same_coupler"],
    },
    ReportTable {
        name: "colliding_CZ_desired_iSWAP_same",
        title: "iSWAP disturbed by CZ on the same coupler",
        cases: &["iSWAP_vs_CZ_same_coupler"],
    },
    ReportTable {
        name: "CZ_CZ_neighbor",
        title: "CZ vs CZ on neighbouring couplers",
        cases: &["CZ20_vs_CZ20_neighbor", "CZ20_vs_CZ02_neighbor", "CZ02_vs_CZ02_neighbor"],
    },
    ReportTable {
        name: "CZ_CZ_neighbor_more",
        title: "CZ vs CZ on neighbouring couplers, two shared states",
        cases: &["CZ02_vs_CZ20_neighbor"],
    },
    ReportTable {
        name: "colliding_iSWAP_desired_CZ_neighbor",
        title: "CZ disturbed by iSWAP on a neighbouring coupler",
        cases: &["CZ_vs_iSWAP_neighbor"],
    },
    ReportTable {
        name: "colliding_CZ_desired_iSWAP_neighbor",
        title: "iSWAP disturbed by CZ on a neighbouring coupler",
        cases: &["iSWAP_vs_CZ20_neighbor"],
    },
    ReportTable {
        name: "colliding_CZ_desired_iSWAP_neighbor_more",
        title: "iSWAP disturbed by CZ on a neighbouring coupler, two shared states",
        cases: &["iSWAP_vs_CZ02_neighbor"],
    },
    ReportTable {
        name: "iSWAP_iSWAP",
        title: "iSWAP vs iSWAP on neighbouring couplers",
        cases: &["iSWAP_vs_iSWAP_neighbor"],
    },
];

impl ReportTable {
    /// Bound at one cell: the maximum over the table's cases.
    pub fn value(&self, table: &BoundTable, g_fraction: f64, threshold: f64) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for c in self.cases {
            best = best.max(table.get(c, g_fraction, threshold)?);
        }
        Ok(best)
    }

    /// CSV with one row per coupling fraction and one column per threshold.
    pub fn to_csv(&self, table: &BoundTable) -> Result<String> {
        let mut s = String::from("g_fraction");
        for t in THRESHOLDS {
            let _ = write!(s, ",delta_min_ghz_f{t}");
        }
        s.push('\n');
        for g in g_fractions() {
            let _ = write!(s, "{g:.1}");
            for t in THRESHOLDS {
                let _ = write!(s, ",{:.3}", self.value(table, g, t)?);
            }
            s.push('\n');
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_rules_on_oscillating_curve() {
        let c = [0.5, 0.995, 0.98, 0.999, 0.9995, 0.9999];
        assert_eq!(crossing_index(&c, 0.99, CrossingRule::First), Some(1));
        assert_eq!(crossing_index(&c, 0.99, CrossingRule::Last), Some(3));
        assert_eq!(crossing_index(&c, 0.3, CrossingRule::Last), Some(0));
        assert_eq!(crossing_index(&[0.5, 0.2], 0.9, CrossingRule::First), None);
        assert_eq!(crossing_index(&[0.95, 0.5], 0.9, CrossingRule::Last), None);
    }

    #[test]
    fn interpolation_anchors() {
        let row: [f64; 10] = std::array::from_fn(|k| (k + 1) as f64 * 0.01);
        assert!((interpolate_row(&row, 0.2) - 0.02).abs() < 1e-15);
        assert!((interpolate_row(&row, 0.05) - 0.005).abs() < 1e-15);
        assert!((interpolate_row(&row, 0.0)).abs() < 1e-15);
        assert!((interpolate_row(&row, 1.0) - 0.1).abs() < 1e-15);
        assert!((interpolate_row(&row, 0.55) - 0.055).abs() < 1e-15);
    }

    #[test]
    fn grid_size() {
        assert_eq!(ScanConfig::default().n_points(), 2501);
    }

    #[test]
    fn hash_changes_with_config() {
        let a = ScanConfig::default();
        let b = ScanConfig {
            grid_step_mhz: 2.0,
            ..a
        };
        assert_eq!(config_hash(&a), config_hash(&a));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn report_tables_reference_catalog_cases() {
        let names: Vec<String> = catalog().into_iter().map(|c| c.name).collect();
        for t in REPORT_TABLES {
            for c in t.cases {
                assert!(names.iter().any(|n| n == c), "{c}");
            }
        }
    }
}
