//! Properties of the minimum-detuning scan and the bound tables.

use std::sync::OnceLock;

use crowding::collision_bounds::{
    bound_for, build_tables, crossing_index, minimum_detuning, BoundTable, CrossingRule, ScanConfig, THRESHOLDS,
};
use crowding::gate_dynamics::{catalog, CaseEvaluator, CollisionCase};
use proptest::prelude::*;

fn scan(rule: CrossingRule, step_mhz: f64) -> ScanConfig {
    ScanConfig {
        grid_step_mhz: step_mhz,
        rule,
        ..ScanConfig::default()
    }
}

fn last_rule_table() -> &'static BoundTable {
    static TABLE: OnceLock<BoundTable> = OnceLock::new();
    TABLE.get_or_init(|| build_tables(&scan(CrossingRule::Last, 1.0)).unwrap())
}

fn case_at(i: usize) -> CollisionCase {
    catalog().swap_remove(i)
}

fn neighbour_case_indices() -> Vec<usize> {
    catalog()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.same_coupler)
        .map(|(i, _)| i)
        .collect()
}

fn rule() -> impl Strategy<Value = CrossingRule> {
    prop_oneof![Just(CrossingRule::First), Just(CrossingRule::Last)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bounds_grow_with_the_threshold(i in 0usize..13, k in 1usize..=10, r in rule()) {
        let case = case_at(i);
        let cfg = scan(r, 1.0);
        let g = k as f64 / 10.0;
        let b: Vec<f64> = THRESHOLDS.iter().map(|&t| minimum_detuning(&case, g, t, &cfg).unwrap()).collect();
        prop_assert!(b[0] <= b[1] && b[1] <= b[2], "{}: {b:?}", case.name);
    }

    #[test]
    fn last_crossing_bound_is_safe_beyond(i in 0usize..13, k in 1usize..=10, t in 0usize..3) {
        let case = case_at(i);
        let cfg = scan(CrossingRule::Last, 1.0);
        let g = k as f64 / 10.0;
        let thr = THRESHOLDS[t];
        let d = minimum_detuning(&case, g, thr, &cfg).unwrap();
        let eval = CaseEvaluator::new(case.clone(), cfg.method).unwrap();
        for step in 0..=20 {
            let delta = d + step as f64 * cfg.grid_step_mhz * 1e-3;
            let f = eval.fidelity(delta, g * case.g_wcs).unwrap();
            prop_assert!(f >= thr, "{} g={g}: F({delta}) = {f} < {thr}", case.name);
        }
    }

    #[test]
    fn interpolated_bounds_cover_direct_scans(j in 0usize..9, x in 0.01f64..0.99, t in 0usize..3) {
        let idx = neighbour_case_indices();
        let case = case_at(idx[j % idx.len()]);
        let cfg = scan(CrossingRule::Last, 1.0);
        let thr = THRESHOLDS[t];
        let interpolated = bound_for(last_rule_table(), &case, x, thr).unwrap();
        let direct = minimum_detuning(&case, x, thr, &cfg).unwrap();
        prop_assert!(
            interpolated >= direct - cfg.grid_step_mhz * 1e-3 - 1e-12,
            "{} x={x} F>{thr}: interpolated {interpolated} < direct {direct}",
            case.name
        );
    }

    #[test]
    fn crossing_rules_agree_on_monotone_curves(mut curve in prop::collection::vec(0.0f64..1.0, 1..200), thr in 0.0f64..1.0) {
        curve.sort_by(f64::total_cmp);
        prop_assert_eq!(crossing_index(&curve, thr, CrossingRule::First), crossing_index(&curve, thr, CrossingRule::Last));
    }

    #[test]
    fn last_crossing_never_precedes_first(curve in prop::collection::vec(0.0f64..1.0, 1..200), thr in 0.0f64..1.0) {
        let first = crossing_index(&curve, thr, CrossingRule::First);
        let last = crossing_index(&curve, thr, CrossingRule::Last);
        if let Some(l) = last {
            prop_assert!(first.is_some_and(|f| f <= l));
            prop_assert!(curve[l..].iter().all(|&v| v >= thr));
        }
    }
}

#[test]
fn tables_are_deterministic() {
    let cfg = scan(CrossingRule::First, 5.0);
    let a = build_tables(&cfg).unwrap();
    let b = build_tables(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.entries.len(), 13 * 10 * 3);
    assert!(a.matches(&cfg));
    assert!(!a.matches(&scan(CrossingRule::Last, 5.0)));
}

#[test]
fn same_coupler_bounds_ignore_crosstalk() {
    let table = last_rule_table();
    for case in catalog().into_iter().filter(|c| c.same_coupler) {
        let full = table.get(&case.name, 1.0, 0.999).unwrap();
        assert_eq!(bound_for(table, &case, 0.02, 0.999).unwrap(), full);
    }
}
