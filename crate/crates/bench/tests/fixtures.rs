use gbp_bench::{adversarial, uniform_set};
use gbp_core::{balanced_coloring, check_packing, first_fit_conflicts, Order};

#[test]
fn benchmark_inputs_pack_feasibly() {
    for inst in uniform_set(40, 8, 3).iter().chain([adversarial(10)].iter()) {
        for p in [
            balanced_coloring(inst),
            first_fit_conflicts(inst, &Order::Decreasing),
        ] {
            assert!(check_packing(inst, &p).feasible);
        }
    }
}

#[test]
fn uniform_set_is_stable() {
    assert_eq!(uniform_set(10, 2, 2), uniform_set(10, 2, 2));
}
