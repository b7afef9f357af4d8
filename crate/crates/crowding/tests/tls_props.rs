//! Properties of TLS spectroscopy analysis and the dead-qubit Monte Carlo.

use crowding::tls_analysis::{
    add_relative_noise, fit_tls_peaks, purcell_correction, simulate_spectrum, three_point_t1, tls_census,
    PeakFitOptions, TlsRecord,
};
use crowding::tls_collision_mc::{simulate_dead_qubits, sweep, TlsCountMode, TlsMcConfig, TlsSweepAxis};
use proptest::prelude::*;

fn record(f: f64, g_khz: f64, gamma: f64) -> TlsRecord {
    TlsRecord {
        f_d_ghz: f,
        g_d_khz: g_khz,
        gamma_per_us: gamma,
        gamma_1q_per_us: 0.02,
    }
}

fn small_mc(trials: u64, seed: u64, mode: TlsCountMode) -> TlsMcConfig {
    TlsMcConfig {
        trials,
        seed,
        count_mode: mode,
        ..TlsMcConfig::default()
    }
}

fn mode() -> impl Strategy<Value = TlsCountMode> {
    prop_oneof![Just(TlsCountMode::Poisson), Just(TlsCountMode::Fixed)]
}

proptest! {
    #[test]
    fn three_point_round_trip(t1 in 0.5f64..200.0, ts in 0.1f64..20.0, p0 in 0.0f64..0.2, amp in 0.3f64..0.8) {
        let p1 = p0 + amp;
        let ps = p0 + amp * (-ts / t1).exp();
        prop_assume!(ps > p0 && p1 > ps);
        let got = three_point_t1(p1, ps, p0, ts).unwrap();
        prop_assert!((got - t1).abs() / t1 < 1e-9, "{got} vs {t1}");
    }

    #[test]
    fn census_is_monotone(
        tls in prop::collection::vec((4.0f64..6.0, 10.0f64..400.0), 0..30),
        lo_thr in 0.0f64..200.0,
        extra in 0.0f64..200.0,
    ) {
        let recs: Vec<TlsRecord> = tls.iter().map(|&(f, g)| record(f, g, 5.0)).collect();
        let low = tls_census(&recs, lo_thr, 4.0, 6.0);
        let high = tls_census(&recs, lo_thr + extra, 4.0, 6.0);
        for c in [&low, &high] {
            prop_assert!(c.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        }
        prop_assert!(high.last().unwrap().1 <= low.last().unwrap().1);
    }

    #[test]
    fn purcell_reciprocal_sum(
        t1 in 5.0f64..300.0,
        kappa in 0.2f64..5.0,
        g01 in 20.0f64..200.0,
        delta in 500.0f64..3000.0,
        wr in 6.0f64..7.5,
        wq in 3.5f64..5.5,
    ) {
        if let Ok(q) = purcell_correction(t1, kappa, g01, delta, wr, wq) {
            let lhs = 1.0 / q.q_measured;
            let rhs = 1.0 / q.q_tls + 1.0 / q.q_purcell;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
            prop_assert!(q.q_tls > q.q_measured);
        }
    }

    #[test]
    fn separated_peaks_are_all_recovered(
        n in 1usize..5,
        offset in 0.0f64..0.05,
        seed in any::<u64>(),
        g_khz in 90.0f64..250.0,
        gamma in 4.0f64..15.0,
    ) {
        let step = 2e-4;
        let grid: Vec<f64> = (0..=6000).map(|i| 4.3 + i as f64 * step).collect();
        let truth: Vec<TlsRecord> = (0..n)
            .map(|k| record(4.45 + offset + 0.25 * k as f64, g_khz, gamma))
            .collect();
        let trace = add_relative_noise(&simulate_spectrum(&truth, 0.02, &grid), 0.01, seed).unwrap();
        let fits = fit_tls_peaks(&trace, &PeakFitOptions::default()).unwrap();
        prop_assert_eq!(fits.len(), n);
        for (fit, t) in fits.iter().zip(truth.iter()) {
            prop_assert!((fit.record.f_d_ghz - t.f_d_ghz).abs() <= step);
            prop_assert!((fit.record.g_d_khz - t.g_d_khz).abs() / t.g_d_khz <= 0.1);
        }
    }

    #[test]
    fn dead_qubit_mc_is_reproducible(seed in any::<u64>(), m in mode()) {
        let cfg = small_mc(300, seed, m);
        let a = simulate_dead_qubits(&cfg).unwrap();
        let b = simulate_dead_qubits(&cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dead_qubits_grow_with_every_parameter(seed in any::<u64>(), m in mode()) {
        let cfg = small_mc(400, seed, m);
        let axes = [
            (TlsSweepAxis::BoundMhz, vec![10.0, 20.0, 40.0, 80.0]),
            (TlsSweepAxis::RhoD, vec![0.0, 0.5, 1.5, 3.0]),
            (TlsSweepAxis::JunctionArea, vec![0.036, 0.109, 0.2]),
            (TlsSweepAxis::NQubits, vec![8.0, 16.0, 50.0, 100.0]),
        ];
        for (axis, values) in axes {
            let pts = sweep(&cfg, axis, &values).unwrap();
            for w in pts.windows(2) {
                prop_assert!(
                    w[1].stats.mean >= w[0].stats.mean,
                    "{axis:?}: {} at {} then {} at {}",
                    w[0].stats.mean, w[0].axis_value, w[1].stats.mean, w[1].axis_value
                );
            }
        }
    }
}

#[test]
fn no_tls_means_no_dead_qubits() {
    let cfg = TlsMcConfig {
        rho_d: 0.0,
        trials: 500,
        ..TlsMcConfig::default()
    };
    let r = simulate_dead_qubits(&cfg).unwrap();
    assert!(r.per_trial.iter().all(|&d| d == 0));
}

#[test]
fn flat_spectrum_has_no_peaks() {
    let grid: Vec<f64> = (0..1000).map(|i| 4.0 + i as f64 * 1e-3).collect();
    let trace = simulate_spectrum(&[], 0.03, &grid);
    assert!(fit_tls_peaks(&trace, &PeakFitOptions::default()).unwrap().is_empty());
}
