use gbp_core::harness::{generate, Family, GenSpec};
use gbp_core::*;
use proptest::prelude::*;

fn r(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn uniform(n: usize, groups: usize, seed: u64) -> Instance {
    let family = Family::Uniform {
        n,
        groups,
        min_size: r("0.05"),
        max_size: r("0.7"),
    };
    generate(&GenSpec {
        family,
        seed,
        name: None,
    })
    .unwrap()
}

#[test]
fn all_solvers_agree_on_a_small_instance() {
    // two groups of three halves: each bin takes one half from each group
    let inst = Instance::new(
        2,
        [0, 0, 0, 1, 1, 1]
            .into_iter()
            .map(|g| (r("1/2"), g))
            .collect(),
    )
    .unwrap();
    assert_eq!(lower_bound(&inst), 3);
    let exact = solve_exact(&inst, &SolveLimits::default()).unwrap();
    assert_eq!(exact.opt, 3);
    assert!(exact.proven_optimal);
    for p in [
        exact.packing,
        balanced_coloring(&inst),
        first_fit_conflicts(&inst, &Order::Decreasing),
        run_aptas(&inst, &r("0.3"), &Budgets::default()).unwrap().0,
    ] {
        assert!(check_packing(&inst, &p).feasible);
        assert!(p.num_bins() >= 3);
    }
}

#[test]
fn json_round_trip_keeps_external_ids() {
    let text = r#"{"n_groups": 2, "items": [
        {"id": 40, "size": "0.5", "group": 1},
        {"id": 7, "size": "1/3", "group": 0}]}"#;
    let (inst, warnings) = instance_from_json(text).unwrap();
    assert_eq!(
        warnings.len(),
        1,
        "sparse ids are renumbered with a warning"
    );
    let p = balanced_coloring(&inst);
    let back = packing_from_json(&inst, &packing_to_json(&inst, &p)).unwrap();
    assert_eq!(back.bins, p.bins);
    assert_eq!(back.core_bins, p.core_bins);
    let (again, _) = instance_from_json(&instance_to_json(&inst)).unwrap();
    assert_eq!(instance_to_json(&again), instance_to_json(&inst));
}

#[test]
fn oversized_items_are_rejected() {
    assert!(Instance::new(1, vec![(r("3/2"), 0)]).is_err());
    assert!(instance_from_json(
        r#"{"n_groups": 1, "items": [{"id": 0, "size": "-1/4", "group": 0}]}"#
    )
    .is_err());
}

#[test]
fn scheme_report_adds_up() {
    for seed in 0..10 {
        let inst = uniform(14, 5, seed);
        let (p, rep) = run_aptas(&inst, &r("1/4"), &Budgets::exhaustive()).unwrap();
        assert!(check_packing(&inst, &p).feasible);
        assert_eq!(rep.total_bins, p.num_bins());
        assert_eq!(rep.core_bins + rep.extra_bins, rep.total_bins);
        assert_eq!(rep.extra_by_cause.values().sum::<usize>(), rep.extra_bins);
        assert!(rep.total_bins <= balanced_coloring(&inst).num_bins());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn heuristics_respect_the_lower_bound(n in 0usize..25, groups in 1usize..6, seed in 0u64..1000) {
        let inst = uniform(n, groups, seed);
        let lb = lower_bound(&inst);
        for p in [balanced_coloring(&inst), first_fit_conflicts(&inst, &Order::Random(seed))] {
            prop_assert!(check_packing(&inst, &p).feasible);
            prop_assert!(p.num_bins() >= lb);
        }
    }
}
