//! Monte Carlo over fabrication scatter of qubit frequencies on a tiled
//! lattice: counts gate-frequency collisions and collision-free yield.
//!
//! A collision is recorded when two transitions that can be driven next to
//! each other lie closer in frequency than the bound of the matching
//! collision case, evaluated at the crosstalk-scaled coupling strength.

use std::collections::{BTreeMap, BTreeSet};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::collision_bounds::{bound_for, BoundTable};
use crate::device_model::{Gate, LatticeLayout};
use crate::error::{Error, Result};
use crate::gate_dynamics::{case_by_name, CollisionCase};
use crate::lattice_allocation::{pair_frequencies, tile_lattice, UnitCell};
use crate::rng::item_rng;
use crate::sampling::{map_indexed, SampleStats};

const STREAM: &str = "qpu_mc";

/// Which single-qubit pairs are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborPolicy {
    /// Pairs joined by a coupler.
    #[default]
    NearestOnly,
    /// Coupled pairs plus diagonal next-nearest pairs.
    NearestAndNext,
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QpuMcConfig {
    /// Standard deviation of fabricated f01 around design (MHz).
    pub sigma_f_mhz: f64,
    /// Crosstalk fraction X_AC of the worst-case coupling.
    pub x_ac: f64,
    /// Target average gate fidelity.
    pub f_threshold: f64,
    pub trials: u64,
    pub seed: u64,
    pub neighbor_policy: NeighborPolicy,
    /// Multiplier on `x_ac` for next-nearest single-qubit pairs.
    pub next_nearest_scale: f64,
    /// Coupling fraction for CZ-vs-CZ checks on one coupler with both CZs enabled.
    pub same_coupler_cz_fraction: f64,
}

impl Default for QpuMcConfig {
    fn default() -> Self {
        Self {
            sigma_f_mhz: 40.0,
            x_ac: 0.02,
            f_threshold: 0.999,
            trials: 2000,
            seed: 1,
            neighbor_policy: NeighborPolicy::NearestOnly,
            next_nearest_scale: 1.0,
            same_coupler_cz_fraction: 1.0,
        }
    }
}

impl QpuMcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_f_mhz >= 0.0) || !self.sigma_f_mhz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma_f must be non-negative, got {} MHz",
                self.sigma_f_mhz
            )));
        }
        if !(0.0..=1.0).contains(&self.x_ac) {
            return Err(Error::InvalidParameter(format!("x_ac must lie in [0, 1], got {}", self.x_ac)));
        }
        if !(self.f_threshold > 0.0 && self.f_threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fidelity threshold must lie in (0, 1), got {}",
                self.f_threshold
            )));
        }
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&(self.x_ac * self.next_nearest_scale)) || !(self.next_nearest_scale >= 0.0) {
            return Err(Error::InvalidParameter("next-nearest crosstalk must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.same_coupler_cz_fraction) {
            return Err(Error::InvalidParameter("same-coupler CZ fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A transition whose frequency enters a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transition {
    /// Bare 0→1 frequency of a qubit.
    Qubit { qubit: usize },
    /// Modulation frequency of a parametric gate on a coupler.
    Gate { coupler: usize, gate: Gate },
}

/// Family a check belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    SingleQubitNearest,
    SingleQubitNext,
    SameCoupler,
    NeighborCoupler,
}

/// How the colliding strength of a check is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Strength {
    /// `scale · x_ac` of the worst case.
    Crosstalk { scale: f64 },
    /// A fixed fraction of the worst case.
    Fixed { fraction: f64 },
}

/// One pairwise frequency comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub kind: CheckKind,
    pub first: Transition,
    pub second: Transition,
    /// Candidate collision cases; the largest bound applies.
    pub cases: Vec<String>,
    pub strength: Strength,
}

fn two_qubit_gates(layout: &LatticeLayout, coupler: usize) -> Vec<Gate> {
    layout.couplers[coupler]
        .enabled_gates
        .iter()
        .copied()
        .filter(|g| *g != Gate::X1q)
        .collect()
}

/// Qubit of coupler `k` that is doubly excited by CZ gate `g`.
fn excited_qubit(layout: &LatticeLayout, k: usize, g: Gate) -> usize {
    let c = &layout.couplers[k];
    if g == Gate::Cz20 {
        c.qubit_a
    } else {
        c.qubit_b
    }
}

/// Cases describing gate `desired` on coupler `kd` disturbed by gate
/// `colliding` on coupler `kc`, both touching `shared`.
fn neighbor_cases(layout: &LatticeLayout, shared: usize, kd: usize, desired: Gate, kc: usize, colliding: Gate) -> Vec<&'static str> {
    let is_cz = |g: Gate| matches!(g, Gate::Cz20 | Gate::Cz02);
    match (is_cz(desired), is_cz(colliding)) {
        (false, false) => vec!["iSWAP_vs_iSWAP_neighbor"],
        (false, true) => {
            if excited_qubit(layout, kc, colliding) == shared {
                vec!["iSWAP_vs_CZ20_neighbor"]
            } else {
                vec!["iSWAP_vs_CZ02_neighbor"]
            }
        }
        (true, false) => vec!["CZ_vs_iSWAP_neighbor"],
        (true, true) => {
            let d_shared = excited_qubit(layout, kd, desired) == shared;
            let c_shared = excited_qubit(layout, kc, colliding) == shared;
            vec![match (d_shared, c_shared) {
                (false, true) => "CZ20_vs_CZ20_neighbor",
                (false, false) => "CZ20_vs_CZ02_neighbor",
                (true, false) => "CZ02_vs_CZ02_neighbor",
                (true, true) => "CZ02_vs_CZ20_neighbor",
            }]
        }
    }
}

/// Lists every check of a layout whose qubit ids equal their indices (see
/// [`LatticeLayout::with_index_ids`]).
///
/// Single-qubit checks compare bare frequencies of coupled (and, with
/// [`NeighborPolicy::NearestAndNext`], diagonal) pairs. Each coupler compares
/// its enabled gates pairwise. Every pair of couplers sharing a qubit compares
/// every combination of their enabled gates; either gate may be the one
/// disturbed, so both readings contribute candidate cases.
pub fn enumerate_checks(layout: &LatticeLayout, policy: NeighborPolicy, cfg: &QpuMcConfig) -> Vec<Check> {
    let mut out = vec![];
    let crosstalk = Strength::Crosstalk { scale: 1.0 };
    for c in &layout.couplers {
        out.push(Check {
            kind: CheckKind::SingleQubitNearest,
            first: Transition::Qubit { qubit: c.qubit_a },
            second: Transition::Qubit { qubit: c.qubit_b },
            cases: vec!["1qg_vs_1qg_nn".into()],
            strength: crosstalk,
        });
    }
    if policy == NeighborPolicy::NearestAndNext {
        for r in 0..layout.rows.saturating_sub(1) {
            for c in 0..layout.cols {
                let i = layout.index(r, c);
                let mut diag = vec![];
                if c + 1 < layout.cols {
                    diag.push(layout.index(r + 1, c + 1));
                }
                if c >= 1 {
                    diag.push(layout.index(r + 1, c - 1));
                }
                for j in diag {
                    out.push(Check {
                        kind: CheckKind::SingleQubitNext,
                        first: Transition::Qubit { qubit: i },
                        second: Transition::Qubit { qubit: j },
                        cases: vec!["1qg_vs_1qg_nnn".into()],
                        strength: Strength::Crosstalk {
                            scale: cfg.next_nearest_scale,
                        },
                    });
                }
            }
        }
    }
    for k in 0..layout.couplers.len() {
        let gates = two_qubit_gates(layout, k);
        for (i, &g1) in gates.iter().enumerate() {
            for &g2 in &gates[i + 1..] {
                let (cases, strength) = if g1 == Gate::ISwap || g2 == Gate::ISwap {
                    (
                        vec!["CZ_vs_iSWAP_same_coupler".to_string(), "iSWAP_vs_CZ_same_coupler".to_string()],
                        Strength::Fixed { fraction: 1.0 },
                    )
                } else {
                    (
                        vec!["CZ02_vs_CZ20_same_coupler".to_string()],
                        Strength::Fixed {
                            fraction: cfg.same_coupler_cz_fraction,
                        },
                    )
                };
                out.push(Check {
                    kind: CheckKind::SameCoupler,
                    first: Transition::Gate { coupler: k, gate: g1 },
                    second: Transition::Gate { coupler: k, gate: g2 },
                    cases,
                    strength,
                });
            }
        }
    }
    for q in 0..layout.n_qubits() {
        let ks = layout.couplers_of(q);
        for (i, &k1) in ks.iter().enumerate() {
            for &k2 in &ks[i + 1..] {
                for g1 in two_qubit_gates(layout, k1) {
                    for g2 in two_qubit_gates(layout, k2) {
                        let cases: BTreeSet<&str> = neighbor_cases(layout, q, k1, g1, k2, g2)
                            .into_iter()
                            .chain(neighbor_cases(layout, q, k2, g2, k1, g1))
                            .collect();
                        out.push(Check {
                            kind: CheckKind::NeighborCoupler,
                            first: Transition::Gate { coupler: k1, gate: g1 },
                            second: Transition::Gate { coupler: k2, gate: g2 },
                            cases: cases.into_iter().map(String::from).collect(),
                            strength: crosstalk,
                        });
                    }
                }
            }
        }
    }
    out
}

/// A check with its bound resolved for a given crosstalk and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedCheck {
    pub check: Check,
    pub bound_ghz: f64,
    /// Case whose bound applies.
    pub case: String,
}

/// Resolves the bound of every check; the largest candidate bound wins.
pub fn resolve_bounds(checks: &[Check], table: &BoundTable, cfg: &QpuMcConfig) -> Result<Vec<BoundedCheck>> {
    let mut cache: BTreeMap<String, CollisionCase> = BTreeMap::new();
    checks
        .iter()
        .map(|chk| {
            let x = match chk.strength {
                Strength::Crosstalk { scale } => cfg.x_ac * scale,
                Strength::Fixed { fraction } => fraction,
            };
            let mut best: Option<(f64, String)> = None;
            for name in &chk.cases {
                if !cache.contains_key(name) {
                    cache.insert(name.clone(), case_by_name(name)?);
                }
                let mut case = cache[name].clone();
                // Fixed strengths apply at the stated fraction even on same-coupler cases.
                if matches!(chk.strength, Strength::Fixed { .. }) {
                    case.same_coupler = false;
                }
                let b = bound_for(table, &case, x.clamp(0.0, 1.0), cfg.f_threshold)?;
                if best.as_ref().is_none_or(|(v, _)| b > *v) {
                    best = Some((b, name.clone()));
                }
            }
            let (bound_ghz, case) = best.ok_or_else(|| Error::MissingBound("check without cases".into()))?;
            Ok(BoundedCheck {
                check: chk.clone(),
                bound_ghz,
                case,
            })
        })
        .collect()
}

/// Fabricated frequencies of one trial: design plus `σ_f · z` with one
/// standard normal `z` per lattice site.
///
/// Draws are keyed by the site's (row, column), so lattices of different sizes
/// share the draws of their common sites and runs differing only in `σ_f`
/// share the same `z`.
pub fn sample_frequencies(layout: &LatticeLayout, sigma_f_mhz: f64, seed: u64, trial: u64) -> Vec<f64> {
    (0..layout.n_qubits())
        .map(|q| {
            let (r, c) = layout.position(q);
            let site = ((r as u64) << 32) | c as u64;
            let z: f64 = StandardNormal.sample(&mut item_rng(seed, STREAM, trial, site));
            layout.qubits[q].f01 + sigma_f_mhz * 1e-3 * z
        })
        .collect()
}

fn transition_frequency(layout: &LatticeLayout, f: &[f64], t: Transition) -> f64 {
    match t {
        Transition::Qubit { qubit } => f[qubit],
        Transition::Gate { coupler, gate } => {
            let c = &layout.couplers[coupler];
            let (qa, qb) = (&layout.qubits[c.qubit_a], &layout.qubits[c.qubit_b]);
            let gf = pair_frequencies(
                f[c.qubit_a],
                qa.alpha_ghz(),
                qa.group,
                f[c.qubit_b],
                qb.alpha_ghz(),
                qb.group,
            );
            match gate {
                Gate::ISwap => gf.iswap,
                Gate::Cz20 => gf.cz20,
                Gate::Cz02 => gf.cz02,
                Gate::X1q => f[c.qubit_a],
            }
        }
    }
}

/// Indices of the checks violated by realised frequencies `f` (GHz).
pub fn count_collisions(layout: &LatticeLayout, f: &[f64], checks: &[BoundedCheck]) -> Result<Vec<usize>> {
    if f.len() != layout.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "{} frequencies for {} qubits",
            f.len(),
            layout.n_qubits()
        )));
    }
    Ok(checks
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            let d = (transition_frequency(layout, f, c.check.first) - transition_frequency(layout, f, c.check.second)).abs();
            d < c.bound_ghz
        })
        .map(|(i, _)| i)
        .collect())
}

/// Outcome of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub n_qubits: usize,
    pub n_checks: usize,
    pub per_trial: Vec<usize>,
    /// Total collisions over all trials, by the case whose bound was violated.
    pub breakdown: BTreeMap<String, u64>,
    pub stats: SampleStats,
    /// Fraction of trials without any collision.
    pub yield_fraction: f64,
}

/// Runs the Monte Carlo on a layout.
///
/// Qubit ids are renumbered to row-major indices first, so layouts with
/// arbitrary ids are accepted.
pub fn simulate(layout: &LatticeLayout, table: &BoundTable, cfg: &QpuMcConfig) -> Result<CollisionReport> {
    cfg.validate()?;
    let layout = &layout.with_index_ids()?;
    let checks = resolve_bounds(&enumerate_checks(layout, cfg.neighbor_policy, cfg), table, cfg)?;
    let hits = map_indexed(cfg.trials, |t| {
        let f = sample_frequencies(layout, cfg.sigma_f_mhz, cfg.seed, t);
        count_collisions(layout, &f, &checks)
    });
    let mut per_trial = Vec::with_capacity(hits.len());
    let mut breakdown: BTreeMap<String, u64> = BTreeMap::new();
    for h in hits {
        let h = h?;
        for &i in &h {
            *breakdown.entry(checks[i].case.clone()).or_default() += 1;
        }
        per_trial.push(h.len());
    }
    let zero = per_trial.iter().filter(|&&c| c == 0).count();
    Ok(CollisionReport {
        n_qubits: layout.n_qubits(),
        n_checks: checks.len(),
        stats: SampleStats::from_counts(&per_trial),
        yield_fraction: zero as f64 / per_trial.len() as f64,
        per_trial,
        breakdown,
    })
}

/// Parameter swept by [`run_study`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyAxis {
    NQubits,
    SigmaF,
    XAc,
    FThreshold,
}

/// One point of a study curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPoint {
    pub axis_value: f64,
    pub rows: usize,
    pub cols: usize,
    pub report: CollisionReport,
}

/// Most nearly square `rows × cols = n` with `rows ≤ cols` and `rows ≥ 2`.
pub fn lattice_shape(n: usize) -> Result<(usize, usize)> {
    let mut r = (n as f64).sqrt().floor() as usize;
    while r >= 2 {
        if n % r == 0 {
            return Ok((r, n / r));
        }
        r -= 1;
    }
    Err(Error::InvalidParameter(format!(
        "{n} qubits cannot form a lattice with at least two rows and columns"
    )))
}

/// Sweeps one parameter with all others fixed. Every point reuses the seed,
/// so points share random draws.
pub fn run_study(
    cell: &UnitCell,
    rows: usize,
    cols: usize,
    base: &QpuMcConfig,
    table: &BoundTable,
    axis: StudyAxis,
    values: &[f64],
) -> Result<Vec<StudyPoint>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("study needs at least one value".into()));
    }
    values
        .iter()
        .map(|&v| {
            let mut cfg = *base;
            let (mut r, mut c) = (rows, cols);
            match axis {
                StudyAxis::NQubits => {
                    if !(v >= 4.0) || v.fract() != 0.0 {
                        return Err(Error::InvalidParameter(format!("qubit count {v} is not a whole number ≥ 4")));
                    }
                    (r, c) = lattice_shape(v as usize)?;
                }
                StudyAxis::SigmaF => cfg.sigma_f_mhz = v,
                StudyAxis::XAc => cfg.x_ac = v,
                StudyAxis::FThreshold => cfg.f_threshold = v,
            }
            let layout = tile_lattice(r, c, cell)?;
            Ok(StudyPoint {
                axis_value: v,
                rows: r,
                cols: c,
                report: simulate(&layout, table, &cfg)?,
            })
        })
        .collect()
}
