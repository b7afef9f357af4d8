//! Properties of the processor-level collision Monte Carlo.

use std::sync::OnceLock;

use crowding::collision_bounds::{build_tables, BoundTable, ScanConfig};
use crowding::device_model::LatticeLayout;
use crowding::lattice_allocation::{allocate_unit_cell, tile_lattice, AllocationRules};
use crowding::qpu_mc::{count_collisions, simulate, CollisionReport, NeighborPolicy, QpuMcConfig};
use proptest::prelude::*;

fn table() -> &'static BoundTable {
    static TABLE: OnceLock<BoundTable> = OnceLock::new();
    TABLE.get_or_init(|| build_tables(&ScanConfig::default()).unwrap())
}

fn lattice(rows: usize, cols: usize) -> LatticeLayout {
    tile_lattice(rows, cols, &allocate_unit_cell(&AllocationRules::default()).unwrap()).unwrap()
}

fn run(rows: usize, cols: usize, cfg: QpuMcConfig) -> CollisionReport {
    simulate(&lattice(rows, cols), table(), &cfg).unwrap()
}

fn base(seed: u64, trials: u64) -> QpuMcConfig {
    QpuMcConfig {
        seed,
        trials,
        ..QpuMcConfig::default()
    }
}

fn nondecreasing(means: &[f64]) -> bool {
    means.windows(2).all(|w| w[1] >= w[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reports_are_reproducible(seed in any::<u64>(), sigma in 0.0f64..150.0) {
        let cfg = QpuMcConfig { sigma_f_mhz: sigma, ..base(seed, 100) };
        prop_assert_eq!(run(6, 6, cfg), run(6, 6, cfg));
    }

    #[test]
    fn breakdown_sums_to_the_total(seed in any::<u64>(), next in any::<bool>()) {
        let policy = if next { NeighborPolicy::NearestAndNext } else { NeighborPolicy::NearestOnly };
        let r = run(6, 6, QpuMcConfig { neighbor_policy: policy, ..base(seed, 200) });
        let total: usize = r.per_trial.iter().sum();
        prop_assert_eq!(r.breakdown.values().sum::<u64>(), total as u64);
        let zero = r.per_trial.iter().filter(|&&c| c == 0).count() as f64 / r.per_trial.len() as f64;
        prop_assert_eq!(r.yield_fraction, zero);
    }

    #[test]
    fn collisions_grow_with_crosstalk_and_threshold(seed in any::<u64>()) {
        let b = base(seed, 200);
        let by_xac: Vec<f64> = [0.01, 0.02, 0.05, 0.1]
            .iter()
            .map(|&x| run(6, 6, QpuMcConfig { x_ac: x, ..b }).stats.mean)
            .collect();
        prop_assert!(nondecreasing(&by_xac), "x_ac: {by_xac:?}");
        let by_f: Vec<f64> = [0.99, 0.999, 0.9999]
            .iter()
            .map(|&f| run(6, 6, QpuMcConfig { f_threshold: f, ..b }).stats.mean)
            .collect();
        prop_assert!(nondecreasing(&by_f), "F: {by_f:?}");
    }

    #[test]
    fn collisions_grow_with_spread_and_size(seed in any::<u64>()) {
        let b = base(seed, 200);
        let by_sigma: Vec<f64> = [10.0, 40.0, 120.0]
            .iter()
            .map(|&s| run(6, 6, QpuMcConfig { sigma_f_mhz: s, ..b }).stats.mean)
            .collect();
        prop_assert!(nondecreasing(&by_sigma), "σ: {by_sigma:?}");
        let by_size: Vec<f64> = [(3, 3), (4, 6), (6, 6), (8, 10)]
            .iter()
            .map(|&(r, c)| run(r, c, b).stats.mean)
            .collect();
        prop_assert!(nondecreasing(&by_size), "size: {by_size:?}");
    }

    #[test]
    fn design_frequencies_are_collision_free(x_ac in 0.0f64..=0.02, f_low in any::<bool>(), rows in 2usize..10, cols in 2usize..10) {
        let cfg = QpuMcConfig {
            sigma_f_mhz: 0.0,
            x_ac,
            f_threshold: if f_low { 0.99 } else { 0.999 },
            ..base(1, 5)
        };
        let r = run(rows, cols, cfg);
        prop_assert!(r.per_trial.iter().all(|&c| c == 0));
        prop_assert_eq!(r.yield_fraction, 1.0);
    }
}

#[test]
fn frequency_vector_must_match_the_layout() {
    let layout = lattice(3, 3);
    assert!(count_collisions(&layout, &[4.5; 4], &[]).is_err());
}

#[test]
fn invalid_settings_are_rejected() {
    let layout = lattice(3, 3);
    for cfg in [
        QpuMcConfig { sigma_f_mhz: -1.0, ..QpuMcConfig::default() },
        QpuMcConfig { x_ac: 1.5, ..QpuMcConfig::default() },
        QpuMcConfig { f_threshold: 1.0, ..QpuMcConfig::default() },
        QpuMcConfig { trials: 0, ..QpuMcConfig::default() },
    ] {
        assert!(simulate(&layout, table(), &cfg).is_err(), "{cfg:?}");
    }
}
