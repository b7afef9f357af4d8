//! Properties of transmon records, unit-cell allocation and lattice tiling.

use crowding::device_model::{ej_ec_ratio_from, validate_layout, Group, LatticeLayout, TransmonSpec};
use crowding::lattice_allocation::{allocate_unit_cell, gate_frequencies, tile_lattice, AllocationRules};
use proptest::prelude::*;

fn rules(delta_q_mhz: f64, base_f_ghz: f64, bandwidth_ghz: f64) -> AllocationRules {
    AllocationRules {
        delta_q_mhz,
        base_f_ghz,
        bandwidth_ghz,
        ..AllocationRules::default()
    }
}

fn default_cell() -> crowding::lattice_allocation::UnitCell {
    allocate_unit_cell(&AllocationRules::default()).unwrap()
}

proptest! {
    #[test]
    fn ej_ec_increases_with_frequency(f in 2.0f64..8.0, df in 1e-3f64..1.0, ec in 100.0f64..400.0) {
        let lo = ej_ec_ratio_from(f, ec).unwrap();
        let hi = ej_ec_ratio_from(f + df, ec).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn tiled_lattices_validate(rows in 2usize..12, cols in 2usize..12) {
        let layout = tile_lattice(rows, cols, &default_cell()).unwrap();
        let violations = validate_layout(&layout);
        prop_assert!(violations.is_empty(), "{violations:?}");
        prop_assert_eq!(layout.couplers.len(), LatticeLayout::expected_edge_count(rows, cols));
    }

    #[test]
    fn coupled_qubits_never_share_a_frequency(rows in 2usize..12, cols in 2usize..12) {
        let layout = tile_lattice(rows, cols, &default_cell()).unwrap();
        for c in &layout.couplers {
            prop_assert_ne!(layout.qubits[c.qubit_a].f01, layout.qubits[c.qubit_b].f01);
        }
    }

    #[test]
    fn neighbours_of_a_site_carry_distinct_frequencies(rows in 3usize..10, cols in 3usize..10) {
        let layout = tile_lattice(rows, cols, &default_cell()).unwrap();
        for q in 0..layout.n_qubits() {
            let mut fs: Vec<f64> = layout
                .couplers_of(q)
                .into_iter()
                .map(|k| {
                    let c = &layout.couplers[k];
                    layout.qubits[c.other(q).unwrap()].f01
                })
                .collect();
            let n = fs.len();
            fs.sort_by(f64::total_cmp);
            fs.dedup();
            prop_assert_eq!(fs.len(), n);
        }
    }

    #[test]
    fn allocation_stays_inside_the_band(dq in 20.0f64..333.0, base in 3.5f64..5.0, bw in 1.0f64..1.5) {
        let cell = allocate_unit_cell(&rules(dq, base, bw)).unwrap();
        for q in &cell.qubits {
            prop_assert!(q.f01 >= base - 1e-9 && q.f01 <= base + bw + 1e-9, "{} outside [{base}, {}]", q.f01, base + bw);
        }
    }

    #[test]
    fn intra_group_spacing_is_delta_q(dq_mhz in 20u32..330, base_mhz in 3500u32..5000) {
        let cell = allocate_unit_cell(&rules(dq_mhz as f64, base_mhz as f64 / 1e3, 1.0)).unwrap();
        for g in [Group::A, Group::B] {
            let fs: Vec<f64> = cell.group(g).iter().map(|q| q.f01).collect();
            prop_assert_eq!(fs.len(), 4);
            for w in fs.windows(2) {
                // Design frequencies sit on a 1 Hz grid, so the spacing is exact in Hz.
                let spacing_hz = ((w[1] - w[0]) * 1e9).round() as i64;
                prop_assert_eq!(spacing_hz, dq_mhz as i64 * 1_000_000);
            }
        }
    }

    #[test]
    fn gate_frequencies_are_swap_symmetric(
        fa in 3.5f64..6.0,
        fb in 3.5f64..6.0,
        aa in -400.0f64..-50.0,
        ab in -400.0f64..-50.0,
    ) {
        let a = TransmonSpec::new(0, fa, aa, Group::A, 0.1).unwrap();
        let b = TransmonSpec::new(1, fb, ab, Group::B, 0.1).unwrap();
        let ab_ = gate_frequencies(&a, &b);
        let ba = gate_frequencies(&b, &a);
        prop_assert_eq!(ab_.iswap, ba.iswap);
        prop_assert_eq!(ab_.cz20, ba.cz02);
        prop_assert_eq!(ab_.cz02, ba.cz20);
        prop_assert_eq!(ab_.low_cz_ghz(), ba.low_cz_ghz());
    }
}

#[test]
fn group_b_doubly_excited_cz_is_the_low_one() {
    let cell = default_cell();
    for a in cell.group(Group::A) {
        for b in cell.group(Group::B) {
            let gf = gate_frequencies(a, b);
            assert!(gf.low_cz_ghz() < gf.high_cz_ghz(), "pair ({}, {})", a.id, b.id);
            assert!(gf.low_cz_ghz() * 1e3 >= 100.0 - 1e-9);
        }
    }
}

#[test]
fn layout_json_round_trip() {
    let layout = tile_lattice(3, 4, &default_cell()).unwrap();
    let text = serde_json::to_string(&layout).unwrap();
    let back: LatticeLayout = serde_json::from_str(&text).unwrap();
    assert_eq!(back, layout);
}
