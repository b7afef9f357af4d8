//! Monte Carlo estimate of qubits lost to junction-TLS frequency collisions.
//!
//! The expected TLS count on a processor is `ρ_d · N_Q · A_J`. Each TLS sits
//! in one qubit's junction at a frequency drawn uniformly over the frequency
//! window; its qubit is dead when the two are closer than the bound `b`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{item_rng, trial_rng};
use crate::sampling::{map_indexed, SampleStats};

const STREAM: &str = "tls_collision_mc";

/// The eight design frequencies of the square-lattice unit cell (GHz).
pub const UNIT_CELL_FREQUENCIES_GHZ: [f64; 8] = [4.3, 4.404, 4.508, 4.612, 4.988, 5.092, 5.196, 5.3];

/// How many TLSs a trial contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TlsCountMode {
    /// Independent Poisson counts per junction (total count Poisson with the
    /// expected mean).
    #[default]
    Poisson,
    /// Exactly `round(ρ_d N_Q A_J)` TLSs, each assigned to a uniformly random qubit.
    Fixed,
}

/// Configuration of [`simulate_dead_qubits`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TlsMcConfig {
    pub n_qubits: usize,
    /// TLS density ρ_d (GHz⁻¹ µm⁻²).
    pub rho_d: f64,
    /// Junction area per qubit A_J (µm²).
    pub a_j: f64,
    /// Collision bound b (MHz).
    pub bound_mhz: f64,
    /// Lower edge of the TLS frequency window (GHz).
    pub f_min_ghz: f64,
    /// Width of the TLS frequency window (GHz).
    pub span_ghz: f64,
    /// Qubit frequencies, cycled over the qubit index (GHz).
    pub allocation_ghz: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub count_mode: TlsCountMode,
}

impl Default for TlsMcConfig {
    fn default() -> Self {
        Self {
            n_qubits: 100,
            rho_d: 1.5,
            a_j: 0.109,
            bound_mhz: 40.0,
            f_min_ghz: 4.3,
            span_ghz: 1.0,
            allocation_ghz: UNIT_CELL_FREQUENCIES_GHZ.to_vec(),
            trials: 10_000,
            seed: 1,
            count_mode: TlsCountMode::Poisson,
        }
    }
}

impl TlsMcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.span_ghz > 0.0) {
            return Err(Error::InvalidParameter("span must be positive".into()));
        }
        if !(self.bound_mhz >= 0.0) || self.bound_mhz * 1e-3 >= self.span_ghz {
            return Err(Error::InvalidParameter(format!(
                "bound {} MHz must be non-negative and below the span",
                self.bound_mhz
            )));
        }
        if !(self.rho_d >= 0.0) || !(self.a_j >= 0.0) {
            return Err(Error::InvalidParameter("density and area must be non-negative".into()));
        }
        if self.allocation_ghz.is_empty() && self.n_qubits > 0 {
            return Err(Error::InvalidParameter("qubit allocation is empty".into()));
        }
        Ok(())
    }

    /// Expected number of TLSs on the processor, `ρ_d N_Q A_J`.
    pub fn expected_tls(&self) -> f64 {
        self.rho_d * self.n_qubits as f64 * self.a_j
    }

    fn qubit_frequency(&self, q: usize) -> f64 {
        self.allocation_ghz[q % self.allocation_ghz.len()]
    }

    /// Probability that one TLS of qubit `q` falls inside its collision window.
    fn window_probability(&self, q: usize) -> f64 {
        let f = self.qubit_frequency(q);
        let b = self.bound_mhz * 1e-3;
        let lo = (f - b).max(self.f_min_ghz);
        let hi = (f + b).min(self.f_min_ghz + self.span_ghz);
        ((hi - lo).max(0.0)) / self.span_ghz
    }
}

/// Summary of one Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeadQubitReport {
    pub stats: SampleStats,
    pub per_trial: Vec<usize>,
}

/// Closed-form expectation of dead qubits, including window clipping at the
/// edges of the frequency range.
///
/// Poisson mode: `Σ_q 1 − exp(−ρ_d A_J p_q)`. Fixed mode:
/// `Σ_q 1 − (1 − p_q/N_Q)^M` with `M = round(ρ_d N_Q A_J)`.
pub fn expected_dead_qubits(cfg: &TlsMcConfig) -> f64 {
    let n = cfg.n_qubits;
    (0..n)
        .map(|q| {
            let p = cfg.window_probability(q);
            match cfg.count_mode {
                TlsCountMode::Poisson => 1.0 - (-cfg.rho_d * cfg.a_j * p).exp(),
                TlsCountMode::Fixed => {
                    let m = cfg.expected_tls().round();
                    1.0 - (1.0 - p / n as f64).powf(m)
                }
            }
        })
        .sum()
}

/// Leading-order expectation `N_Q ρ_d A_J · 2b/span`, ignoring edges.
pub fn naive_expected_dead_qubits(cfg: &TlsMcConfig) -> f64 {
    cfg.expected_tls() * 2.0 * cfg.bound_mhz * 1e-3 / cfg.span_ghz
}

/// Inverse-CDF Poisson draw; monotone in `mean` for a fixed uniform `u`.
fn poisson_inverse(mean: f64, u: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let mut k = 0usize;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf && k < 10_000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        if p == 0.0 {
            break;
        }
    }
    k
}

fn trial_dead(cfg: &TlsMcConfig, trial: u64) -> usize {
    let b = cfg.bound_mhz * 1e-3;
    match cfg.count_mode {
        TlsCountMode::Poisson => {
            let per_qubit = cfg.rho_d * cfg.a_j;
            (0..cfg.n_qubits)
                .filter(|&q| {
                    let mut rng = item_rng(cfg.seed, STREAM, trial, q as u64);
                    let k = poisson_inverse(per_qubit, rng.random::<f64>());
                    let fq = cfg.qubit_frequency(q);
                    (0..k).any(|_| {
                        let f = cfg.f_min_ghz + cfg.span_ghz * rng.random::<f64>();
                        (f - fq).abs() < b
                    })
                })
                .count()
        }
        TlsCountMode::Fixed => {
            let mut rng = trial_rng(cfg.seed, STREAM, trial);
            let m = cfg.expected_tls().round() as usize;
            let mut dead = vec![false; cfg.n_qubits];
            for _ in 0..m {
                let q = rng.random_range(0..cfg.n_qubits);
                let f = cfg.f_min_ghz + cfg.span_ghz * rng.random::<f64>();
                if (f - cfg.qubit_frequency(q)).abs() < b {
                    dead[q] = true;
                }
            }
            dead.iter().filter(|&&d| d).count()
        }
    }
}

/// Runs the Monte Carlo and summarises the number of dead qubits per trial.
pub fn simulate_dead_qubits(cfg: &TlsMcConfig) -> Result<DeadQubitReport> {
    cfg.validate()?;
    if cfg.n_qubits == 0 {
        return Ok(DeadQubitReport {
            stats: SampleStats::from_counts(&vec![0; cfg.trials as usize]),
            per_trial: vec![0; cfg.trials as usize],
        });
    }
    let per_trial = map_indexed(cfg.trials, |t| trial_dead(cfg, t));
    Ok(DeadQubitReport {
        stats: SampleStats::from_counts(&per_trial),
        per_trial,
    })
}

/// Parameter swept by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TlsSweepAxis {
    NQubits,
    BoundMhz,
    RhoD,
    JunctionArea,
}

/// One point of a sweep curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub stats: SampleStats,
    /// Closed-form expectation at this point.
    pub expected: f64,
}

/// Repeats [`simulate_dead_qubits`] over `values`, with the same seed at every
/// point so that neighbouring points share random numbers.
pub fn sweep(cfg: &TlsMcConfig, axis: TlsSweepAxis, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            match axis {
                TlsSweepAxis::NQubits => {
                    if !(v >= 0.0) || v.fract() != 0.0 {
                        return Err(Error::InvalidParameter(format!("qubit count {v} is not a whole number")));
                    }
                    c.n_qubits = v as usize
                }
                TlsSweepAxis::BoundMhz => c.bound_mhz = v,
                TlsSweepAxis::RhoD => c.rho_d = v,
                TlsSweepAxis::JunctionArea => c.a_j = v,
            }
            let rep = simulate_dead_qubits(&c)?;
            Ok(SweepPoint {
                axis_value: v,
                stats: rep.stats,
                expected: expected_dead_qubits(&c),
            })
        })
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_gives_zero() {
        let cfg = TlsMcConfig {
            rho_d: 0.0,
            trials: 200,
            ..Default::default()
        };
        let r = simulate_dead_qubits(&cfg).unwrap();
        assert!(r.per_trial.iter().all(|&c| c == 0));
        assert_eq!(expected_dead_qubits(&cfg), 0.0);
    }

    #[test]
    fn naive_expectation_matches_hand_value() {
        let cfg = TlsMcConfig::default();
        assert!((naive_expected_dead_qubits(&cfg) - 1.308).abs() < 1e-9);
    }

    #[test]
    fn poisson_inverse_matches_cdf() {
        assert_eq!(poisson_inverse(0.0, 0.99), 0);
        assert_eq!(poisson_inverse(1.0, 0.3), 0);
        assert_eq!(poisson_inverse(1.0, 0.5), 1);
        assert!(poisson_inverse(16.0, 0.5) >= 15);
    }

    #[test]
    fn invalid_bound_is_rejected() {
        let cfg = TlsMcConfig {
            bound_mhz: 2000.0,
            ..Default::default()
        };
        assert!(simulate_dead_qubits(&cfg).is_err());
    }
}
