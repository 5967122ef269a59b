//! Fixed instance sets shared by the benchmarks.

use gbp_core::harness::{adversarial_instance, generate, Family, GenSpec};
use gbp_core::{parse_rational, Instance};

/// Uniform instances with `n` items over `groups` groups, seeds 0..count.
pub fn uniform_set(n: usize, groups: usize, count: u64) -> Vec<Instance> {
    (0..count)
        .map(|seed| {
            let family = Family::Uniform {
                n,
                groups,
                min_size: parse_rational("0.05").expect("literal"),
                max_size: parse_rational("0.6").expect("literal"),
            };
            generate(&GenSpec {
                family,
                seed,
                name: None,
            })
            .expect("valid spec")
        })
        .collect()
}

pub fn adversarial(n_hat: usize) -> Instance {
    adversarial_instance(&parse_rational("1/5").expect("literal"), n_hat).expect("valid parameters")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sets_have_requested_shape() {
        let set = uniform_set(12, 3, 4);
        assert_eq!(set.len(), 4);
        assert!(set.iter().all(|i| i.n_items() == 12));
        assert_eq!(adversarial(5).n_items(), 45);
    }
}
