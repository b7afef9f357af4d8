//! Domain records for transmon qubits, tunable couplers and square lattices.
//!
//! Frequencies follow a fixed unit discipline: qubit transition frequencies
//! are in GHz, anharmonicities and charging energies in MHz, junction areas
//! in µm².

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Elementary charge (C).
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Magnetic flux quantum h/2e (Wb).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELECTRON_CHARGE);
/// Superconducting gap of aluminium (µeV).
pub const ALUMINUM_GAP_UEV: f64 = 176.0;

/// Physical constants used by the junction-to-frequency mapping.
///
/// Only the superconducting gap is adjustable; the remaining constants are
/// the exact SI values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Superconducting gap Δ (µeV).
    pub delta_gap_uev: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            delta_gap_uev: ALUMINUM_GAP_UEV,
        }
    }
}

impl PhysicalConstants {
    /// Builds a constant set with a custom gap.
    pub fn with_gap(delta_gap_uev: f64) -> Result<Self> {
        if !(delta_gap_uev > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "superconducting gap must be positive, got {delta_gap_uev} µeV"
            )));
        }
        Ok(Self { delta_gap_uev })
    }

    pub fn planck(&self) -> f64 {
        PLANCK
    }

    pub fn electron_charge(&self) -> f64 {
        ELECTRON_CHARGE
    }

    pub fn flux_quantum(&self) -> f64 {
        FLUX_QUANTUM
    }

    /// Gap energy in joules.
    pub fn delta_gap_joule(&self) -> f64 {
        self.delta_gap_uev * 1e-6 * ELECTRON_CHARGE
    }
}

/// Frequency group of a qubit on the checkerboard lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
}

impl Group {
    pub fn other(self) -> Group {
        match self {
            Group::A => Group::B,
            Group::B => Group::A,
        }
    }
}

/// Gates that a coupler (or a single qubit drive) can activate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gate {
    /// Single-qubit X rotation.
    #[serde(rename = "X1Q")]
    X1q,
    /// Parametric iSWAP through |01⟩ ↔ |10⟩.
    #[serde(rename = "iSWAP")]
    ISwap,
    /// CZ through |11⟩ ↔ |20⟩ (first qubit of the pair visits |2⟩).
    #[serde(rename = "CZ20")]
    Cz20,
    /// CZ through |11⟩ ↔ |02⟩ (second qubit of the pair visits |2⟩).
    #[serde(rename = "CZ02")]
    Cz02,
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Gate::X1q => "X1Q",
            Gate::ISwap => "iSWAP",
            Gate::Cz20 => "CZ20",
            Gate::Cz02 => "CZ02",
        };
        f.write_str(s)
    }
}

/// Design record of one transmon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpec {
    pub id: usize,
    /// 0→1 transition frequency (GHz).
    pub f01: f64,
    /// Anharmonicity f12 − f01 (MHz), negative for transmons.
    pub alpha: f64,
    /// Charging energy E_C/h (MHz).
    pub e_c: f64,
    pub group: Group,
    /// Junction area (µm²).
    pub junction_area: f64,
}

impl TransmonSpec {
    /// Builds a spec with `E_C = −α`, the leading-order transmon relation.
    pub fn new(id: usize, f01: f64, alpha: f64, group: Group, junction_area: f64) -> Result<Self> {
        Self::with_ec(id, f01, alpha, -alpha, group, junction_area)
    }

    /// Builds a spec with an explicitly chosen charging energy.
    pub fn with_ec(
        id: usize,
        f01: f64,
        alpha: f64,
        e_c: f64,
        group: Group,
        junction_area: f64,
    ) -> Result<Self> {
        let spec = Self {
            id,
            f01,
            alpha,
            e_c,
            group,
            junction_area,
        };
        let problems = spec.violations();
        if problems.is_empty() {
            Ok(spec)
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.f01 > 0.0) {
            out.push(format!("qubit {}: f01 must be positive ({} GHz)", self.id, self.f01));
        }
        if !(self.alpha < 0.0) {
            out.push(format!(
                "qubit {}: anharmonicity must be negative ({} MHz)",
                self.id, self.alpha
            ));
        }
        if !(self.e_c > 0.0) {
            out.push(format!("qubit {}: E_C must be positive ({} MHz)", self.id, self.e_c));
        }
        if !(self.junction_area > 0.0) {
            out.push(format!(
                "qubit {}: junction area must be positive ({} µm²)",
                self.id, self.junction_area
            ));
        }
        out
    }

    /// Anharmonicity in GHz.
    pub fn alpha_ghz(&self) -> f64 {
        self.alpha * 1e-3
    }
}

/// E_J/E_C from the first-order transmon dispersion `h f01 = √(8 E_J E_C) − E_C`.
pub fn ej_ec_ratio(spec: &TransmonSpec) -> Result<f64> {
    ej_ec_ratio_from(spec.f01, spec.e_c)
}

/// E_J/E_C for a given f01 (GHz) and E_C (MHz).
pub fn ej_ec_ratio_from(f01_ghz: f64, e_c_mhz: f64) -> Result<f64> {
    if !(e_c_mhz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "E_C must be positive, got {e_c_mhz} MHz"
        )));
    }
    let ec = e_c_mhz * 1e-3;
    let ej = (f01_ghz + ec).powi(2) / (8.0 * ec);
    Ok(ej / ec)
}

/// A tunable coupler joining two qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    pub id: usize,
    #[serde(rename = "a")]
    pub qubit_a: usize,
    #[serde(rename = "b")]
    pub qubit_b: usize,
    #[serde(rename = "gates")]
    pub enabled_gates: BTreeSet<Gate>,
}

impl CouplerSpec {
    pub fn other(&self, q: usize) -> Option<usize> {
        if q == self.qubit_a {
            Some(self.qubit_b)
        } else if q == self.qubit_b {
            Some(self.qubit_a)
        } else {
            None
        }
    }

    pub fn touches(&self, q: usize) -> bool {
        self.qubit_a == q || self.qubit_b == q
    }
}

/// Square lattice of transmons with nearest-neighbour couplers.
///
/// Qubits are stored row-major; the qubit at `(row, col)` has index
/// `row * cols + col`, which is also its `id` for layouts built by this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutDocument", into = "LayoutDocument")]
pub struct LatticeLayout {
    pub rows: usize,
    pub cols: usize,
    pub qubits: Vec<TransmonSpec>,
    pub couplers: Vec<CouplerSpec>,
}

impl LatticeLayout {
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn position(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Expected number of nearest-neighbour edges.
    pub fn expected_edge_count(rows: usize, cols: usize) -> usize {
        rows * cols.saturating_sub(1) + cols * rows.saturating_sub(1)
    }

    /// Indices of couplers touching qubit `q`.
    pub fn couplers_of(&self, q: usize) -> Vec<usize> {
        self.couplers
            .iter()
            .enumerate()
            .filter(|(_, c)| c.touches(q))
            .map(|(k, _)| k)
            .collect()
    }

    /// Copy whose qubit ids equal their row-major indices, with coupler
    /// endpoints translated accordingly.
    pub fn with_index_ids(&self) -> Result<LatticeLayout> {
        let mut out = self.clone();
        for c in &mut out.couplers {
            let a = self.qubit_pos_of_id(c.qubit_a);
            let b = self.qubit_pos_of_id(c.qubit_b);
            match (a, b) {
                (Some(a), Some(b)) => {
                    c.qubit_a = a;
                    c.qubit_b = b;
                }
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "coupler {} references unknown qubit ({} or {})",
                        c.id, c.qubit_a, c.qubit_b
                    )))
                }
            }
        }
        for (k, q) in out.qubits.iter_mut().enumerate() {
            q.id = k;
        }
        Ok(out)
    }

    fn qubit_pos_of_id(&self, id: usize) -> Option<usize> {
        self.qubits.iter().position(|q| q.id == id)
    }
}

/// One invariant violation found by [`validate_layout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Lattice coordinates involved, if any.
    pub sites: Vec<(usize, usize)>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sites.is_empty() {
            write!(f, "{}", self.message)
        } else {
            let sites: Vec<String> = self
                .sites
                .iter()
                .map(|(r, c)| format!("({r},{c})"))
                .collect();
            write!(f, "{} at {}", self.message, sites.join("-"))
        }
    }
}

/// Checks every layout invariant and returns one entry per violation.
pub fn validate_layout(layout: &LatticeLayout) -> Vec<Violation> {
    let mut out = Vec::new();
    let expect_n = layout.rows * layout.cols;
    if layout.qubits.len() != expect_n {
        out.push(Violation {
            sites: vec![],
            message: format!(
                "expected {} qubits for a {}x{} lattice, found {}",
                expect_n,
                layout.rows,
                layout.cols,
                layout.qubits.len()
            ),
        });
        return out;
    }
    let mut seen = HashSet::new();
    for (k, q) in layout.qubits.iter().enumerate() {
        let site = layout.position(k);
        if !seen.insert(q.id) {
            out.push(Violation {
                sites: vec![site],
                message: format!("duplicate qubit id {}", q.id),
            });
        }
        for msg in q.violations() {
            out.push(Violation {
                sites: vec![site],
                message: msg,
            });
        }
    }
    let expect_edges = LatticeLayout::expected_edge_count(layout.rows, layout.cols);
    if layout.couplers.len() != expect_edges {
        out.push(Violation {
            sites: vec![],
            message: format!(
                "expected {} couplers, found {}",
                expect_edges,
                layout.couplers.len()
            ),
        });
    }
    let mut edges = HashSet::new();
    for c in &layout.couplers {
        if c.qubit_a == c.qubit_b {
            out.push(Violation {
                sites: vec![],
                message: format!("coupler {} joins qubit {} to itself", c.id, c.qubit_a),
            });
            continue;
        }
        let (Some(ia), Some(ib)) = (layout.qubit_pos_of_id(c.qubit_a), layout.qubit_pos_of_id(c.qubit_b))
        else {
            out.push(Violation {
                sites: vec![],
                message: format!(
                    "coupler {} references unknown qubit ({} or {})",
                    c.id, c.qubit_a, c.qubit_b
                ),
            });
            continue;
        };
        let (pa, pb) = (layout.position(ia), layout.position(ib));
        let manhattan = pa.0.abs_diff(pb.0) + pa.1.abs_diff(pb.1);
        if manhattan != 1 {
            out.push(Violation {
                sites: vec![pa, pb],
                message: format!("coupler {} does not join nearest neighbours", c.id),
            });
        }
        if !edges.insert((ia.min(ib), ia.max(ib))) {
            out.push(Violation {
                sites: vec![pa, pb],
                message: format!("coupler {} duplicates an existing edge", c.id),
            });
        }
        if layout.qubits[ia].group == layout.qubits[ib].group {
            out.push(Violation {
                sites: vec![pa, pb],
                message: "same-group neighbors".to_string(),
            });
        }
    }
    out
}

/// Flat JSON representation of a layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub rows: usize,
    pub cols: usize,
    pub qubits: Vec<QubitRecord>,
    pub couplers: Vec<CouplerSpec>,
}

/// One qubit entry of a [`LayoutDocument`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QubitRecord {
    pub id: usize,
    pub row: usize,
    pub col: usize,
    pub f01_ghz: f64,
    pub alpha_mhz: f64,
    pub ec_mhz: f64,
    pub group: Group,
    pub area_um2: f64,
}

impl From<LatticeLayout> for LayoutDocument {
    fn from(l: LatticeLayout) -> Self {
        let cols = l.cols.max(1);
        let qubits = l
            .qubits
            .iter()
            .enumerate()
            .map(|(k, q)| QubitRecord {
                id: q.id,
                row: k / cols,
                col: k % cols,
                f01_ghz: q.f01,
                alpha_mhz: q.alpha,
                ec_mhz: q.e_c,
                group: q.group,
                area_um2: q.junction_area,
            })
            .collect();
        LayoutDocument {
            rows: l.rows,
            cols: l.cols,
            qubits,
            couplers: l.couplers,
        }
    }
}

impl TryFrom<LayoutDocument> for LatticeLayout {
    type Error = String;

    fn try_from(doc: LayoutDocument) -> std::result::Result<Self, String> {
        let n = doc.rows * doc.cols;
        let mut slots: Vec<Option<TransmonSpec>> = vec![None; n];
        for q in doc.qubits {
            if q.row >= doc.rows || q.col >= doc.cols {
                return Err(format!("qubit {} at ({},{}) lies outside the lattice", q.id, q.row, q.col));
            }
            let k = q.row * doc.cols + q.col;
            if slots[k].is_some() {
                return Err(format!("two qubits placed at ({},{})", q.row, q.col));
            }
            slots[k] = Some(TransmonSpec {
                id: q.id,
                f01: q.f01_ghz,
                alpha: q.alpha_mhz,
                e_c: q.ec_mhz,
                group: q.group,
                junction_area: q.area_um2,
            });
        }
        let qubits = slots
            .into_iter()
            .enumerate()
            .map(|(k, s)| s.ok_or_else(|| format!("no qubit at ({},{})", k / doc.cols, k % doc.cols)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(LatticeLayout {
            rows: doc.rows,
            cols: doc.cols,
            qubits,
            couplers: doc.couplers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(id: usize, group: Group) -> TransmonSpec {
        let f = if group == Group::A { 4.3 } else { 5.0 };
        TransmonSpec::new(id, f, -200.0, group, 0.1).unwrap()
    }

    fn two_by_two(groups: [Group; 4]) -> LatticeLayout {
        let qubits = groups.iter().enumerate().map(|(i, g)| q(i, *g)).collect();
        let edges = [(0, 1), (2, 3), (0, 2), (1, 3)];
        let couplers = edges
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| CouplerSpec {
                id: k,
                qubit_a: a,
                qubit_b: b,
                enabled_gates: [Gate::ISwap].into_iter().collect(),
            })
            .collect();
        LatticeLayout {
            rows: 2,
            cols: 2,
            qubits,
            couplers,
        }
    }

    #[test]
    fn checkerboard_two_by_two_is_valid() {
        let l = two_by_two([Group::A, Group::B, Group::B, Group::A]);
        assert!(validate_layout(&l).is_empty());
    }

    #[test]
    fn each_same_group_edge_is_reported() {
        let l = two_by_two([Group::A, Group::A, Group::B, Group::A]);
        let v = validate_layout(&l);
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(v.iter().all(|x| x.message == "same-group neighbors"));
        assert_eq!(v[0].sites, vec![(0, 0), (0, 1)]);
        assert_eq!(v[1].sites, vec![(0, 1), (1, 1)]);
    }

    #[test]
    fn ej_ec_examples() {
        let r = ej_ec_ratio_from(4.3, 156.0).unwrap();
        let oracle = (4.456f64.powi(2) / (8.0 * 0.156)) / 0.156;
        assert!((r - oracle).abs() < 1e-12);
        assert!((r - 102.0).abs() < 1.0);
        assert!((ej_ec_ratio_from(0.0, 73.0).unwrap() - 0.125).abs() < 1e-15);
        assert!((ej_ec_ratio_from(4.6, 200.0).unwrap() - 72.0).abs() < 1.0);
        assert!(ej_ec_ratio_from(4.6, 0.0).is_err());
    }

    #[test]
    fn layout_json_round_trip() {
        let l = two_by_two([Group::A, Group::B, Group::B, Group::A]);
        let s = serde_json::to_string(&l).unwrap();
        assert!(s.contains("\"f01_ghz\""));
        assert!(s.contains("\"iSWAP\""));
        let back: LatticeLayout = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn transmon_spec_rejects_positive_alpha() {
        assert!(TransmonSpec::new(0, 4.0, 10.0, Group::A, 0.1).is_err());
        let s = TransmonSpec::new(0, 4.0, -150.0, Group::A, 0.1).unwrap();
        assert_eq!(s.e_c, 150.0);
    }
}
