//! Rotating-frame dynamics of a desired gate in the presence of one
//! colliding resonance, and the average gate fidelity of the result.
//!
//! Time is in ns and every rate (couplings, detunings) is an angular
//! frequency in rad/ns. A detuning quoted in GHz converts with
//! [`ghz_to_angular`].
//!
//! In the rotating frame a desired coupling contributes `(g_g/2)|bra⟩⟨ket|`
//! and a colliding one `(g/2) e^{iΔt} |bra⟩⟨ket|`, each plus its Hermitian
//! conjugate. Two propagators are provided: [`propagate`], a fourth-order
//! Runge–Kutta integrator with step doubling that exploits the periodicity of
//! `H(t)`, and [`propagate_frame`], which removes the time dependence with a
//! diagonal frame change and exponentiates the resulting constant matrix.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device_model::Gate;
use crate::error::{Error, Result};

/// Converts a cyclic frequency in GHz to an angular rate in rad/ns.
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz
}

/// Converts an angular rate in rad/ns to a cyclic frequency in MHz.
pub fn angular_to_mhz(w: f64) -> f64 {
    w / (2.0 * PI) * 1e3
}

/// Product state `|n₁ n₂ …⟩` given by per-qubit excitation numbers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisState(pub Vec<u8>);

impl BasisState {
    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    /// True when every occupation is 0 or 1.
    pub fn is_computational(&self) -> bool {
        self.0.iter().all(|&n| n <= 1)
    }

    fn is_valid(&self) -> bool {
        (2..=3).contains(&self.0.len())
            && self.0.iter().all(|&n| n <= 2)
            && self.0.iter().filter(|&&n| n == 2).count() <= 1
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for n in &self.0 {
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

impl FromStr for BasisState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches('|').trim_end_matches('⟩').trim_end_matches('>');
        let occ = digits
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::InvalidParameter(format!("bad basis state `{s}`")))
            })
            .collect::<Result<Vec<u8>>>()?;
        let st = BasisState(occ);
        if !st.is_valid() {
            return Err(Error::InvalidParameter(format!(
                "basis state `{s}` must have 2 or 3 occupations in 0..=2 with at most one 2"
            )));
        }
        Ok(st)
    }
}

fn st(s: &str) -> BasisState {
    s.parse().expect("catalog states are well formed")
}

/// A transition `|bra⟩⟨ket|` (plus its Hermitian conjugate).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub bra: BasisState,
    pub ket: BasisState,
}

/// One collision scenario: a desired gate and one colliding resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionCase {
    pub name: String,
    pub desired_gate: Gate,
    pub colliding_gate: Gate,
    pub n_qubits: usize,
    pub desired_couplings: Vec<Transition>,
    pub colliding_couplings: Vec<Transition>,
    pub shared_states: Vec<BasisState>,
    /// Gate duration (ns).
    pub t_g: f64,
    /// Desired coupling strength (rad/ns).
    pub g_g: f64,
    /// Worst-case colliding coupling strength (rad/ns).
    pub g_wcs: f64,
    /// True when both resonances live on the same coupler, where crosstalk
    /// does not scale the colliding strength.
    pub same_coupler: bool,
}

impl CollisionCase {
    #[allow(clippy::too_many_arguments)]
    fn new(
        name: &str,
        desired_gate: Gate,
        colliding_gate: Gate,
        t_g: f64,
        g_wcs: f64,
        desired: &[(&str, &str)],
        colliding: &[(&str, &str)],
        same_coupler: bool,
    ) -> Self {
        let tr = |v: &[(&str, &str)]| -> Vec<Transition> {
            v.iter()
                .map(|(b, k)| Transition { bra: st(b), ket: st(k) })
                .collect()
        };
        let desired_couplings = tr(desired);
        let colliding_couplings = tr(colliding);
        let n_qubits = desired_couplings[0].bra.n_qubits();
        let g_g = match desired_gate {
            Gate::Cz20 | Gate::Cz02 => 2.0 * PI / t_g,
            Gate::X1q | Gate::ISwap => PI / t_g,
        };
        let mut case = Self {
            name: name.to_string(),
            desired_gate,
            colliding_gate,
            n_qubits,
            desired_couplings,
            colliding_couplings,
            shared_states: vec![],
            t_g,
            g_g,
            g_wcs,
            same_coupler,
        };
        case.shared_states = case.compute_shared_states();
        case
    }

    /// States appearing in both the desired and the colliding couplings.
    pub fn compute_shared_states(&self) -> Vec<BasisState> {
        let set = |v: &[Transition]| -> BTreeSet<BasisState> {
            v.iter().flat_map(|t| [t.bra.clone(), t.ket.clone()]).collect()
        };
        set(&self.desired_couplings)
            .intersection(&set(&self.colliding_couplings))
            .cloned()
            .collect()
    }

    /// Dimension of the computational space, `2ⁿ`.
    pub fn computational_dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// States touched by any coupling: computational states first, then the
    /// rest, each group in lexicographic order.
    pub fn span(&self) -> Vec<BasisState> {
        let all: BTreeSet<BasisState> = self
            .desired_couplings
            .iter()
            .chain(&self.colliding_couplings)
            .flat_map(|t| [t.bra.clone(), t.ket.clone()])
            .collect();
        let (mut comp, other): (Vec<_>, Vec<_>) = all.into_iter().partition(|s| s.is_computational());
        comp.extend(other);
        comp
    }
}

/// The thirteen collision scenarios of the iSWAP/CZ parametric architecture.
///
/// States are written `|Qb1 Qb2 Qb3⟩`; in neighbour-coupler cases the
/// desired gate acts on Qb1–Qb2 through coupler C1, the colliding one on
/// Qb2–Qb3 through C2, and Qb2 is the shared qubit.
pub fn catalog() -> Vec<CollisionCase> {
    use Gate::*;
    let r2 = std::f64::consts::SQRT_2;
    let t1q = 20.0;
    let tcz = 200.0;
    let tis = 140.0;
    let one_q_des = [("10", "00"), ("11", "01")];
    let one_q_col = [("01", "00"), ("11", "10")];
    let cz20_12 = [("200", "110"), ("201", "111")];
    let cz02_12 = [("020", "110"), ("021", "111")];
    let cz20_23 = [("020", "011"), ("120", "111")];
    let cz02_23 = [("002", "011"), ("102", "111")];
    let is_12 = [("100", "010"), ("101", "011")];
    let is_23 = [("010", "001"), ("110", "101")];
    vec![
        CollisionCase::new("1qg_vs_1qg_nn", X1q, X1q, t1q, PI / t1q, &one_q_des, &one_q_col, false),
        CollisionCase::new("1qg_vs_1qg_nnn", X1q, X1q, t1q, PI / t1q, &one_q_des, &one_q_col, false),
        CollisionCase::new(
            "CZ02_vs_CZ20_same_coupler",
            Cz02,
            Cz20,
            tcz,
            2.0 * PI / tcz,
            &[("02", "11")],
            &[("20", "11")],
            true,
        ),
        CollisionCase::new(
            "CZ_vs_iSWAP_same_coupler",
            Cz20,
            ISwap,
            tcz,
            r2 * PI / tcz,
            &[("20", "11")],
            &[("10", "01")],
            true,
        ),
        CollisionCase::new(
            "iSWAP_vs_CZ_same_coupler",
            ISwap,
            Cz20,
            tis,
            r2 * PI / tis,
            &[("10", "01")],
            &[("20", "11")],
            true,
        ),
        CollisionCase::new("CZ20_vs_CZ20_neighbor", Cz20, Cz20, tcz, 2.0 * PI / tcz, &cz20_12, &cz20_23, false),
        CollisionCase::new("CZ20_vs_CZ02_neighbor", Cz20, Cz02, tcz, 2.0 * PI / tcz, &cz20_12, &cz02_23, false),
        CollisionCase::new("CZ02_vs_CZ02_neighbor", Cz02, Cz02, tcz, 2.0 * PI / tcz, &cz02_12, &cz02_23, false),
        CollisionCase::new("CZ02_vs_CZ20_neighbor", Cz02, Cz20, tcz, 2.0 * PI / tcz, &cz02_12, &cz20_23, false),
        CollisionCase::new(
            "CZ_vs_iSWAP_neighbor",
            Cz20,
            ISwap,
            tcz,
            r2 * PI / tcz,
            &cz20_12,
            &[("010", "001"), ("110", "101"), ("210", "201")],
            false,
        ),
        CollisionCase::new("iSWAP_vs_CZ20_neighbor", ISwap, Cz20, tis, r2 * PI / tis, &is_12, &cz20_23, false),
        CollisionCase::new(
            "iSWAP_vs_CZ02_neighbor",
            ISwap,
            Cz02,
            tis,
            r2 * PI / tis,
            &[("100", "010"), ("101", "011"), ("012", "102")],
            &cz02_23,
            false,
        ),
        CollisionCase::new("iSWAP_vs_iSWAP_neighbor", ISwap, ISwap, tis, PI / tis, &is_12, &is_23, false),
    ]
}

/// Looks a case up by name.
pub fn case_by_name(name: &str) -> Result<CollisionCase> {
    catalog()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::UnknownCase(name.to_string()))
}

/// One coupling term of a Hamiltonian, by basis index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub bra: usize,
    pub ket: usize,
    /// Matrix element magnitude, i.e. half the coupling strength (rad/ns).
    pub amplitude: f64,
}

/// Rotating-frame Hamiltonian with constant desired terms and colliding terms
/// carrying the phase `e^{iΔt}` on `|bra⟩⟨ket|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    pub dim: usize,
    pub desired: Vec<Term>,
    pub colliding: Vec<Term>,
    /// Detuning Δ (rad/ns).
    pub delta: f64,
}

impl Hamiltonian {
    pub fn new(dim: usize, desired: Vec<Term>, colliding: Vec<Term>, delta: f64) -> Result<Self> {
        for t in desired.iter().chain(&colliding) {
            if t.bra >= dim || t.ket >= dim || t.bra == t.ket {
                return Err(Error::InvalidParameter(format!(
                    "term ({}, {}) is not an off-diagonal element of a {dim}-dimensional space",
                    t.bra, t.ket
                )));
            }
        }
        Ok(Self {
            dim,
            desired,
            colliding,
            delta,
        })
    }

    /// Dense matrix of `H(t)`.
    pub fn matrix(&self, t: f64) -> DMatrix<Complex64> {
        let mut h = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for term in &self.desired {
            h[(term.bra, term.ket)] += Complex64::new(term.amplitude, 0.0);
            h[(term.ket, term.bra)] += Complex64::new(term.amplitude, 0.0);
        }
        let ph = Complex64::from_polar(1.0, self.delta * t);
        for term in &self.colliding {
            h[(term.bra, term.ket)] += ph * term.amplitude;
            h[(term.ket, term.bra)] += ph.conj() * term.amplitude;
        }
        h
    }

    /// Largest rate present, used to size integration steps.
    pub fn max_rate(&self) -> f64 {
        self.desired
            .iter()
            .chain(&self.colliding)
            .map(|t| 2.0 * t.amplitude)
            .fold(self.delta.abs(), f64::max)
    }

    fn has_time_dependence(&self) -> bool {
        self.delta != 0.0 && self.colliding.iter().any(|t| t.amplitude != 0.0)
    }

    /// Diagonal energies `E` with `E_bra − E_ket = Δ` on colliding terms and
    /// equal energies across desired terms, if such an assignment exists.
    pub fn frame_energies(&self) -> Option<Vec<f64>> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![vec![]; self.dim];
        for t in &self.desired {
            adj[t.bra].push((t.ket, 0.0));
            adj[t.ket].push((t.bra, 0.0));
        }
        for t in &self.colliding {
            adj[t.bra].push((t.ket, self.delta));
            adj[t.ket].push((t.bra, -self.delta));
        }
        let mut e: Vec<Option<f64>> = vec![None; self.dim];
        let scale = 1e-12 * (1.0 + self.delta.abs());
        for root in 0..self.dim {
            if e[root].is_some() {
                continue;
            }
            e[root] = Some(0.0);
            let mut stack = vec![root];
            while let Some(u) = stack.pop() {
                let eu = e[u].unwrap();
                for &(v, d) in &adj[u] {
                    // E_u − E_v = d
                    match e[v] {
                        None => {
                            e[v] = Some(eu - d);
                            stack.push(v);
                        }
                        Some(ev) => {
                            if (eu - ev - d).abs() > scale {
                                return None;
                            }
                        }
                    }
                }
            }
        }
        Some(e.into_iter().map(Option::unwrap).collect())
    }

    /// Writes `−i H(t) X` into `out` (all matrices column-major `dim × dim`).
    fn rhs(&self, t: f64, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let mi = Complex64::new(0.0, -1.0);
        let mut add = |row: usize, src: usize, coef: Complex64| {
            for c in 0..n {
                out[c * n + row] += coef * x[c * n + src];
            }
        };
        for term in &self.desired {
            let a = mi * term.amplitude;
            add(term.bra, term.ket, a);
            add(term.ket, term.bra, a);
        }
        if !self.colliding.is_empty() {
            let ph = Complex64::from_polar(1.0, self.delta * t);
            for term in &self.colliding {
                add(term.bra, term.ket, mi * ph * term.amplitude);
                add(term.ket, term.bra, mi * ph.conj() * term.amplitude);
            }
        }
    }
}

/// Hamiltonian of a collision case on its [`CollisionCase::span`] basis.
///
/// `delta` and `g` are in rad/ns; `g` is the colliding coupling strength.
pub fn build_hamiltonian(case: &CollisionCase, delta: f64, g: f64) -> Result<(Vec<BasisState>, Hamiltonian)> {
    if !(g >= 0.0) {
        return Err(Error::InvalidParameter(format!("coupling must be non-negative, got {g}")));
    }
    let basis = case.span();
    let idx: HashMap<&BasisState, usize> = basis.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let term = |t: &Transition, amp: f64| Term {
        bra: idx[&t.bra],
        ket: idx[&t.ket],
        amplitude: amp,
    };
    let desired = case.desired_couplings.iter().map(|t| term(t, case.g_g / 2.0)).collect();
    let colliding = case.colliding_couplings.iter().map(|t| term(t, g / 2.0)).collect();
    let h = Hamiltonian::new(basis.len(), desired, colliding, delta)?;
    Ok((basis, h))
}

/// Accuracy controls for [`propagate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    /// Target bound on the entrywise error of the final propagator.
    pub tolerance: f64,
    /// Maximum number of RK4 steps spent on any one segment.
    pub max_steps: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_steps: 1 << 22,
        }
    }
}

/// Integrates `i dU/dt = H(t) U` from 0 to `t`.
///
/// When `H` has period `T = 2π/|Δ|` shorter than `t`, one period is
/// integrated and raised to the required power before the remainder is
/// appended. Each segment is refined by step doubling until the
/// Richardson error estimate meets its share of `opts.tolerance`.
pub fn propagate(h: &Hamiltonian, t: f64, opts: &PropagationOptions) -> Result<DMatrix<Complex64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("propagation time must be positive, got {t}")));
    }
    if !h.has_time_dependence() {
        return integrate_adaptive(h, 0.0, t, opts.tolerance, opts);
    }
    let period = 2.0 * PI / h.delta.abs();
    let n_periods = (t / period).floor();
    if n_periods < 1.0 {
        return integrate_adaptive(h, 0.0, t, opts.tolerance, opts);
    }
    let rem = t - n_periods * period;
    let tol_period = opts.tolerance / (2.0 * n_periods);
    let u_period = integrate_adaptive(h, 0.0, period, tol_period, opts)?;
    let u_cycles = matrix_power(&u_period, n_periods as u64);
    if rem <= period * 1e-14 {
        return Ok(u_cycles);
    }
    let u_rem = integrate_adaptive(h, 0.0, rem, opts.tolerance / 2.0, opts)?;
    Ok(u_rem * u_cycles)
}

fn matrix_power(m: &DMatrix<Complex64>, mut e: u64) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

fn integrate_adaptive(
    h: &Hamiltonian,
    t0: f64,
    t1: f64,
    tol: f64,
    opts: &PropagationOptions,
) -> Result<DMatrix<Complex64>> {
    let len = t1 - t0;
    let rate = h.max_rate().max(1e-12);
    let h_max = (len / 2000.0).min(1.0 / (50.0 * rate));
    let mut steps = ((len / h_max).ceil() as usize).max(1);
    let mut coarse = rk4_fixed(h, t0, t1, steps);
    loop {
        if 2 * steps > opts.max_steps {
            return Err(Error::IntegrationFailure(format!(
                "tolerance {tol:e} not reached within {} steps over {len} ns",
                opts.max_steps
            )));
        }
        let fine = rk4_fixed(h, t0, t1, 2 * steps);
        let err = coarse
            .iter()
            .zip(fine.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / 15.0;
        if err <= tol {
            return Ok(fine);
        }
        coarse = fine;
        steps *= 2;
    }
}

/// Classical RK4 with `steps` equal steps, starting from the identity.
fn rk4_fixed(h: &Hamiltonian, t0: f64, t1: f64, steps: usize) -> DMatrix<Complex64> {
    let n = h.dim;
    let nn = n * n;
    let zero = Complex64::new(0.0, 0.0);
    let mut u = vec![zero; nn];
    for i in 0..n {
        u[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![zero; nn], vec![zero; nn], vec![zero; nn], vec![zero; nn], vec![zero; nn]);
    let dt = (t1 - t0) / steps as f64;
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        h.rhs(t, &u, &mut k1);
        for i in 0..nn {
            tmp[i] = u[i] + k1[i] * (dt / 2.0);
        }
        h.rhs(t + dt / 2.0, &tmp, &mut k2);
        for i in 0..nn {
            tmp[i] = u[i] + k2[i] * (dt / 2.0);
        }
        h.rhs(t + dt / 2.0, &tmp, &mut k3);
        for i in 0..nn {
            tmp[i] = u[i] + k3[i] * dt;
        }
        h.rhs(t + dt, &tmp, &mut k4);
        for i in 0..nn {
            u[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    DMatrix::from_column_slice(n, n, &u)
}

/// Exact propagator through the frame in which `H` is constant.
///
/// With `E` from [`Hamiltonian::frame_energies`], `H(t) = e^{iEt} H₀ e^{−iEt}`
/// where `H₀` is the Hamiltonian at `t = 0`, hence
/// `U(t) = e^{iEt} exp(−i(H₀ + E)t)`. `H₀ + E` is real symmetric and is
/// diagonalised directly.
pub fn propagate_frame(h: &Hamiltonian, t: f64) -> Result<DMatrix<Complex64>> {
    let e = h.frame_energies().ok_or_else(|| {
        Error::IntegrationFailure("no diagonal frame removes the time dependence".into())
    })?;
    let n = h.dim;
    let mut k = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(e.clone()));
    for term in h.desired.iter().chain(&h.colliding) {
        k[(term.bra, term.ket)] += term.amplitude;
        k[(term.ket, term.bra)] += term.amplitude;
    }
    let eig = SymmetricEigen::new(k);
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DMatrix::<Complex64>::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&w| Complex64::from_polar(1.0, -w * t)),
    ));
    let w = &v * phases * v.transpose();
    let mut u = w;
    for (r, er) in e.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, er * t);
        for c in 0..n {
            u[(r, c)] *= ph;
        }
    }
    Ok(u)
}

/// Closed-form propagator of the driven two-level system
/// `H = [[0, (g/2)e^{−iΔt}], [(g/2)e^{iΔt}, 0]]`.
pub fn analytic_two_level(g: f64, delta: f64, t: f64) -> DMatrix<Complex64> {
    let omega = (delta * delta + g * g).sqrt();
    let (s, c) = (omega * t / 2.0).sin_cos();
    let i = Complex64::new(0.0, 1.0);
    let (d_over, g_over) = if omega > 0.0 { (delta / omega, g / omega) } else { (0.0, 0.0) };
    let em = Complex64::from_polar(1.0, -delta * t / 2.0);
    let ep = Complex64::from_polar(1.0, delta * t / 2.0);
    DMatrix::from_row_slice(
        2,
        2,
        &[
            em * (c + i * d_over * s),
            -i * em * g_over * s,
            -i * ep * g_over * s,
            ep * (c - i * d_over * s),
        ],
    )
}

/// The two-level Hamiltonian whose exact propagator is [`analytic_two_level`].
pub fn two_level_hamiltonian(g: f64, delta: f64) -> Hamiltonian {
    Hamiltonian {
        dim: 2,
        desired: vec![],
        colliding: vec![Term {
            bra: 1,
            ket: 0,
            amplitude: g / 2.0,
        }],
        delta,
    }
}

/// All occupation-≤1 states of `n` qubits in lexicographic order.
pub fn computational_states(n: usize) -> Vec<BasisState> {
    (0..1usize << n)
        .map(|k| BasisState((0..n).map(|q| ((k >> (n - 1 - q)) & 1) as u8).collect()))
        .collect()
}

/// Restricts a propagator on `basis` to the computational subspace of
/// `n_qubits`; computational states outside `basis` evolve trivially.
pub fn project(u: &DMatrix<Complex64>, basis: &[BasisState], n_qubits: usize) -> DMatrix<Complex64> {
    let comp = computational_states(n_qubits);
    let pos: HashMap<&BasisState, usize> = basis.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let d = comp.len();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for (i, si) in comp.iter().enumerate() {
        for (j, sj) in comp.iter().enumerate() {
            m[(i, j)] = match (pos.get(si), pos.get(sj)) {
                (Some(&a), Some(&b)) => u[(a, b)],
                _ if i == j => Complex64::new(1.0, 0.0),
                _ => Complex64::new(0.0, 0.0),
            };
        }
    }
    m
}

/// `F = (|Tr(M U_g†)|² + Tr(M M†)) / (d(d+1))`.
pub fn average_gate_fidelity(m: &DMatrix<Complex64>, u_g: &DMatrix<Complex64>) -> Result<f64> {
    if m.shape() != u_g.shape() || m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "M is {:?}, U_g is {:?}",
            m.shape(),
            u_g.shape()
        )));
    }
    let d = m.nrows() as f64;
    let overlap: Complex64 = m.iter().zip(u_g.iter()).map(|(a, b)| a * b.conj()).sum();
    let norm: f64 = m.iter().map(|a| a.norm_sqr()).sum();
    Ok((overlap.norm_sqr() + norm) / (d * (d + 1.0)))
}

/// How [`CaseEvaluator`] obtains propagators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PropagationMethod {
    /// Exact exponentiation in the co-rotating frame ([`propagate_frame`]).
    Frame,
    /// Runge–Kutta integration ([`propagate`]) with the given tolerance.
    Rk4 { tolerance: f64 },
}

impl Default for PropagationMethod {
    fn default() -> Self {
        PropagationMethod::Frame
    }
}

/// Fidelity evaluator for one case with the ideal gate cached.
#[derive(Debug, Clone)]
pub struct CaseEvaluator {
    pub case: CollisionCase,
    pub method: PropagationMethod,
    ideal: DMatrix<Complex64>,
}

impl CaseEvaluator {
    pub fn new(case: CollisionCase, method: PropagationMethod) -> Result<Self> {
        let ideal = ideal_gate_with(&case, method)?;
        Ok(Self { case, method, ideal })
    }

    pub fn ideal(&self) -> &DMatrix<Complex64> {
        &self.ideal
    }

    /// Projected propagator at detuning `delta_ghz` and colliding strength `g` (rad/ns).
    pub fn projected(&self, delta_ghz: f64, g: f64) -> Result<DMatrix<Complex64>> {
        let (basis, h) = build_hamiltonian(&self.case, ghz_to_angular(delta_ghz), g)?;
        let u = run(&h, self.case.t_g, self.method)?;
        Ok(project(&u, &basis, self.case.n_qubits))
    }

    /// Average gate fidelity at detuning `delta_ghz` and colliding strength `g` (rad/ns).
    pub fn fidelity(&self, delta_ghz: f64, g: f64) -> Result<f64> {
        average_gate_fidelity(&self.projected(delta_ghz, g)?, &self.ideal)
    }
}

fn run(h: &Hamiltonian, t: f64, method: PropagationMethod) -> Result<DMatrix<Complex64>> {
    match method {
        PropagationMethod::Frame => propagate_frame(h, t),
        PropagationMethod::Rk4 { tolerance } => propagate(
            h,
            t,
            &PropagationOptions {
                tolerance,
                ..Default::default()
            },
        ),
    }
}

fn ideal_gate_with(case: &CollisionCase, method: PropagationMethod) -> Result<DMatrix<Complex64>> {
    let (basis, h) = build_hamiltonian(case, 0.0, 0.0)?;
    let u = run(&h, case.t_g, method)?;
    Ok(project(&u, &basis, case.n_qubits))
}

/// Collision-free propagator of the case at `t_g`, on the computational basis.
pub fn ideal_gate(case: &CollisionCase) -> Result<DMatrix<Complex64>> {
    ideal_gate_with(case, PropagationMethod::Frame)
}

/// Average gate fidelity of `case` at detuning `delta_ghz` and colliding strength `g` (rad/ns).
pub fn collision_fidelity(case: &CollisionCase, delta_ghz: f64, g: f64) -> Result<f64> {
    CaseEvaluator::new(case.clone(), PropagationMethod::Frame)?.fidelity(delta_ghz, g)
}
