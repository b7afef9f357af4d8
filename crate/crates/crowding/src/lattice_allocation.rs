//! Two-group frequency allocation for square lattices of fixed-frequency
//! transmons coupled through parametrically driven couplers.
//!
//! Group A holds four equispaced low frequencies with the smaller
//! anharmonicity, group B four equispaced high frequencies with the larger
//! one. Nearest neighbours always belong to different groups and a qubit's
//! neighbours carry mutually distinct frequencies.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::device_model::{ej_ec_ratio, CouplerSpec, Gate, Group, LatticeLayout, TransmonSpec};
use crate::error::{Error, Result};

/// Parameters of the unit-cell allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AllocationRules {
    /// Intra-group frequency spacing Δ_Q (MHz).
    pub delta_q_mhz: f64,
    /// Lowest group-A frequency (GHz).
    pub base_f_ghz: f64,
    /// Total frequency band available (GHz).
    pub bandwidth_ghz: f64,
    /// Minimum acceptable low-frequency CZ transition (MHz).
    pub min_low_cz_mhz: f64,
    /// Minimum acceptable E_J/E_C.
    pub min_ej_ec: f64,
    /// |α_A| in units of Δ_Q.
    pub alpha_a_factor: f64,
    /// |α_B| in units of Δ_Q.
    pub alpha_b_factor: f64,
    /// Junction area assigned to every qubit (µm²).
    pub junction_area_um2: f64,
}

impl Default for AllocationRules {
    fn default() -> Self {
        Self {
            delta_q_mhz: 104.0,
            base_f_ghz: 4.3,
            bandwidth_ghz: 1.0,
            min_low_cz_mhz: 100.0,
            min_ej_ec: 60.0,
            alpha_a_factor: 1.5,
            alpha_b_factor: 2.5,
            junction_area_um2: 0.109,
        }
    }
}

impl AllocationRules {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.delta_q_mhz,
            self.base_f_ghz,
            self.bandwidth_ghz,
            self.min_low_cz_mhz,
            self.min_ej_ec,
            self.alpha_a_factor,
            self.alpha_b_factor,
            self.junction_area_um2,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("allocation rules must be finite".into()));
        }
        if !(self.delta_q_mhz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spacing Δ_Q must be positive, got {} MHz",
                self.delta_q_mhz
            )));
        }
        if !(self.bandwidth_ghz > 0.0) || !(self.base_f_ghz > 0.0) {
            return Err(Error::InvalidParameter("base frequency and bandwidth must be positive".into()));
        }
        if !(self.alpha_a_factor > 0.0) || !(self.alpha_b_factor > 0.0) || !(self.junction_area_um2 > 0.0) {
            return Err(Error::InvalidParameter(
                "anharmonicity factors and junction area must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Lowest group-B frequency: B occupies the top of the band.
    pub fn base_b_ghz(&self) -> f64 {
        self.base_f_ghz + self.bandwidth_ghz - 3.0 * self.delta_q_mhz * 1e-3
    }
}

/// Advisory finding of [`allocate_unit_cell`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AllocationWarning {
    /// A frequency lies outside `[base_f, base_f + bandwidth]`.
    OutsideBand { qubit: usize, f01_ghz: f64 },
    /// The groups overlap in frequency.
    GroupOverlap { top_a_ghz: f64, bottom_b_ghz: f64 },
    /// An A–B pair has its low-frequency CZ below the minimum.
    LowCzTooLow { qubit_a: usize, qubit_b: usize, low_cz_mhz: f64 },
    /// A qubit's E_J/E_C lies below the minimum.
    EjEcTooLow { qubit: usize, ratio: f64 },
}

impl fmt::Display for AllocationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocationWarning::OutsideBand { qubit, f01_ghz } => {
                write!(f, "qubit {qubit} at {f01_ghz:.3} GHz lies outside the band")
            }
            AllocationWarning::GroupOverlap { top_a_ghz, bottom_b_ghz } => write!(
                f,
                "group A reaches {top_a_ghz:.3} GHz, above group B's lowest {bottom_b_ghz:.3} GHz"
            ),
            AllocationWarning::LowCzTooLow {
                qubit_a,
                qubit_b,
                low_cz_mhz,
            } => write!(f, "pair ({qubit_a}, {qubit_b}) has its low CZ at {low_cz_mhz:.1} MHz, below the minimum"),
            AllocationWarning::EjEcTooLow { qubit, ratio } => {
                write!(f, "qubit {qubit} has E_J/E_C = {ratio:.1}, below the minimum")
            }
        }
    }
}

/// The eight-qubit unit cell and its advisory checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCell {
    pub rules: AllocationRules,
    /// Qubits 1–4 (group A) then 5–8 (group B), with ids 1..=8.
    pub qubits: Vec<TransmonSpec>,
    pub warnings: Vec<AllocationWarning>,
}

impl UnitCell {
    pub fn group(&self, g: Group) -> Vec<&TransmonSpec> {
        self.qubits.iter().filter(|q| q.group == g).collect()
    }
}

/// Builds the unit cell: A at `base_f + kΔ_Q`, B at `base_b + kΔ_Q`
/// (`k = 0..3`), `α_A = −1.5Δ_Q`, `α_B = −2.5Δ_Q` by default.
pub fn allocate_unit_cell(rules: &AllocationRules) -> Result<UnitCell> {
    rules.validate()?;
    let dq = rules.delta_q_mhz * 1e-3;
    let alpha_a = -rules.alpha_a_factor * rules.delta_q_mhz;
    let alpha_b = -rules.alpha_b_factor * rules.delta_q_mhz;
    let mut qubits = Vec::with_capacity(8);
    for k in 0..4 {
        let f = round_hz(rules.base_f_ghz + k as f64 * dq);
        qubits.push(TransmonSpec::new(k + 1, f, alpha_a, Group::A, rules.junction_area_um2)?);
    }
    for k in 0..4 {
        let f = round_hz(rules.base_b_ghz() + k as f64 * dq);
        qubits.push(TransmonSpec::new(k + 5, f, alpha_b, Group::B, rules.junction_area_um2)?);
    }

    let mut warnings = vec![];
    let (lo, hi) = (rules.base_f_ghz, rules.base_f_ghz + rules.bandwidth_ghz);
    for q in &qubits {
        if q.f01 < lo - 1e-12 || q.f01 > hi + 1e-12 {
            warnings.push(AllocationWarning::OutsideBand { qubit: q.id, f01_ghz: q.f01 });
        }
    }
    let top_a = qubits[3].f01;
    let bottom_b = qubits[4].f01;
    if top_a >= bottom_b {
        warnings.push(AllocationWarning::GroupOverlap {
            top_a_ghz: top_a,
            bottom_b_ghz: bottom_b,
        });
    }
    for a in &qubits[..4] {
        for b in &qubits[4..] {
            let low = gate_frequencies(a, b).low_cz_ghz() * 1e3;
            if low < rules.min_low_cz_mhz {
                warnings.push(AllocationWarning::LowCzTooLow {
                    qubit_a: a.id,
                    qubit_b: b.id,
                    low_cz_mhz: low,
                });
            }
        }
    }
    for q in &qubits {
        let ratio = ej_ec_ratio(q)?;
        if ratio < rules.min_ej_ec {
            warnings.push(AllocationWarning::EjEcTooLow { qubit: q.id, ratio });
        }
    }
    Ok(UnitCell {
        rules: *rules,
        qubits,
        warnings,
    })
}

/// Rounds to 1 Hz so that decimal design frequencies print exactly.
fn round_hz(f_ghz: f64) -> f64 {
    (f_ghz * 1e9).round() / 1e9
}

/// Which CZ transition of a pair lies lower in modulation frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowCz {
    Cz20,
    Cz02,
}

/// Modulation frequencies of the parametric gates of one qubit pair (GHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateFrequencies {
    pub iswap: f64,
    /// `|11⟩ ↔ |20⟩`: the first qubit visits its second excited state.
    pub cz20: f64,
    /// `|11⟩ ↔ |02⟩`: the second qubit visits its second excited state.
    pub cz02: f64,
    pub low_cz: LowCz,
}

impl GateFrequencies {
    pub fn low_cz_ghz(&self) -> f64 {
        match self.low_cz {
            LowCz::Cz20 => self.cz20,
            LowCz::Cz02 => self.cz02,
        }
    }

    pub fn high_cz_ghz(&self) -> f64 {
        match self.low_cz {
            LowCz::Cz20 => self.cz02,
            LowCz::Cz02 => self.cz20,
        }
    }
}

/// Gate frequencies of the pair `(a, b)` from bare frequencies and anharmonicities.
///
/// The low-frequency CZ is the one in which the group-B qubit is doubly
/// excited; for a same-group pair it is simply the smaller of the two.
pub fn gate_frequencies(a: &TransmonSpec, b: &TransmonSpec) -> GateFrequencies {
    pair_frequencies(a.f01, a.alpha_ghz(), a.group, b.f01, b.alpha_ghz(), b.group)
}

/// [`gate_frequencies`] on raw values: frequencies and anharmonicities in GHz.
pub fn pair_frequencies(fa: f64, alpha_a: f64, ga: Group, fb: f64, alpha_b: f64, gb: Group) -> GateFrequencies {
    let iswap = (fa - fb).abs();
    let cz20 = (fb - fa - alpha_a).abs();
    let cz02 = (fa - fb - alpha_b).abs();
    let low_cz = match (ga, gb) {
        (Group::A, Group::B) => LowCz::Cz02,
        (Group::B, Group::A) => LowCz::Cz20,
        _ if cz20 <= cz02 => LowCz::Cz20,
        _ => LowCz::Cz02,
    };
    GateFrequencies {
        iswap,
        cz20,
        cz02,
        low_cz,
    }
}

/// Assignment of unit-cell slots to lattice sites.
pub trait TilePattern {
    /// Group and slot index (0..4 within the group) at `(row, col)`.
    fn slot(&self, row: usize, col: usize) -> (Group, usize);
}

/// Checkerboard of groups (A where `row + col` is even) with each group's
/// four frequencies laid out on the 45°-rotated sublattice in a 2×2 cycle.
///
/// With sublattice coordinates `u = ⌊(r+c)/2⌋`, `v = ⌊(r−c)/2⌋` the slot is
/// `2(u mod 2) + (v mod 2)`; the four neighbours of any site then occupy the
/// four distinct slots of the other group.
#[derive(Debug, Clone, Copy, Default)]
pub struct RotatedCheckerboard;

impl TilePattern for RotatedCheckerboard {
    fn slot(&self, row: usize, col: usize) -> (Group, usize) {
        let (r, c) = (row as i64, col as i64);
        let (group, s) = if (r + c) % 2 == 0 { (Group::A, r + c) } else { (Group::B, r + c - 1) };
        let u = s.div_euclid(2);
        let v = (s - 2 * c).div_euclid(2);
        (group, (2 * u.rem_euclid(2) + v.rem_euclid(2)) as usize)
    }
}

/// Tiles a `rows × cols` lattice with [`RotatedCheckerboard`].
pub fn tile_lattice(rows: usize, cols: usize, cell: &UnitCell) -> Result<LatticeLayout> {
    tile_lattice_with(rows, cols, cell, &RotatedCheckerboard)
}

/// Tiles a lattice with an arbitrary slot pattern. Couplers join every pair of
/// nearest neighbours and enable iSWAP plus the low-frequency CZ.
pub fn tile_lattice_with(rows: usize, cols: usize, cell: &UnitCell, pattern: &dyn TilePattern) -> Result<LatticeLayout> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidParameter(format!(
            "lattice must be at least 2×2, got {rows}×{cols}"
        )));
    }
    let a = cell.group(Group::A);
    let b = cell.group(Group::B);
    if a.len() != 4 || b.len() != 4 {
        return Err(Error::InvalidParameter("unit cell needs four qubits per group".into()));
    }
    let mut qubits = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let (g, s) = pattern.slot(r, c);
            if s >= 4 {
                return Err(Error::InvalidParameter(format!("pattern slot {s} out of range at ({r}, {c})")));
            }
            let src = if g == Group::A { a[s] } else { b[s] };
            let mut q = src.clone();
            q.id = r * cols + c;
            q.group = g;
            qubits.push(q);
        }
    }
    let mut couplers = vec![];
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            let mut neighbours = vec![];
            if c + 1 < cols {
                neighbours.push(i + 1);
            }
            if r + 1 < rows {
                neighbours.push(i + cols);
            }
            for j in neighbours {
                let gf = gate_frequencies(&qubits[i], &qubits[j]);
                let cz = match gf.low_cz {
                    LowCz::Cz20 => Gate::Cz20,
                    LowCz::Cz02 => Gate::Cz02,
                };
                couplers.push(CouplerSpec {
                    id: couplers.len(),
                    qubit_a: i,
                    qubit_b: j,
                    enabled_gates: [Gate::ISwap, cz].into_iter().collect(),
                });
            }
        }
    }
    Ok(LatticeLayout {
        rows,
        cols,
        qubits,
        couplers,
    })
}

/// Per-coupler gate frequencies as CSV
/// (`coupler_id,iswap_ghz,cz_low_ghz,cz_high_ghz`).
pub fn gate_frequency_csv(layout: &LatticeLayout) -> String {
    let mut s = String::from("coupler_id,qubit_a,qubit_b,iswap_ghz,cz_low_ghz,cz_high_ghz\n");
    for c in &layout.couplers {
        let gf = gate_frequencies(&layout.qubits[c.qubit_a], &layout.qubits[c.qubit_b]);
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.6}",
            c.id,
            c.qubit_a,
            c.qubit_b,
            gf.iswap,
            gf.low_cz_ghz(),
            gf.high_cz_ghz()
        );
    }
    s
}
