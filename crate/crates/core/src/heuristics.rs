//! Balanced coloring and First-Fit with conflicts.

use crate::model::rational::{ceil_usize, int, max};
use crate::model::{
    max_group_cardinality, total_size, GroupId, Instance, ItemId, Packing, Rational,
};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// ⌈max{2S, S + v_max}⌉, the guarantee of [`balanced_coloring`].
pub fn coloring_bound(total: &Rational, vmax: usize) -> usize {
    ceil_usize(&max(total * int(2), total + int(vmax)))
}

pub fn instance_coloring_bound(inst: &Instance) -> usize {
    coloring_bound(&total_size(inst), max_group_cardinality(inst))
}

pub fn balanced_coloring(inst: &Instance) -> Packing {
    let items: Vec<(ItemId, Rational, GroupId)> = inst
        .items()
        .iter()
        .map(|it| (it.id, it.size.clone(), it.group))
        .collect();
    Packing::new(balanced_coloring_bins(&items), "balanced")
}

/// Balanced coloring over an arbitrary pool of `(id, size, group)` triples.
///
/// The lowest group id plays the role of the first group: each of its items
/// opens a color, and the color count is padded to v_max. Every later group,
/// sorted by non-increasing size, sends each item to the lightest color that
/// has no item of that group yet. Each color is then packed with First-Fit in
/// insertion order.
pub fn balanced_coloring_bins(items: &[(ItemId, Rational, GroupId)]) -> Vec<Vec<ItemId>> {
    let mut by_group: BTreeMap<GroupId, Vec<usize>> = BTreeMap::new();
    for (k, it) in items.iter().enumerate() {
        by_group.entry(it.2).or_default().push(k);
    }
    let vmax = by_group.values().map(Vec::len).max().unwrap_or(0);
    let mut totals: Vec<Rational> = vec![Rational::zero(); vmax];
    let mut colors: Vec<Vec<usize>> = vec![Vec::new(); vmax];
    let mut groups = by_group.into_values();
    if let Some(first) = groups.next() {
        for (c, k) in first.into_iter().enumerate() {
            totals[c] += &items[k].1;
            colors[c].push(k);
        }
    }
    let mut used = vec![false; vmax];
    for mut members in groups {
        members.sort_by(|&a, &b| {
            items[b]
                .1
                .cmp(&items[a].1)
                .then(items[a].0.cmp(&items[b].0))
        });
        used.iter_mut().for_each(|u| *u = false);
        for k in members {
            let c = (0..vmax)
                .filter(|&c| !used[c])
                .min_by(|&a, &b| totals[a].cmp(&totals[b]).then(a.cmp(&b)))
                .expect("v_max colors always leave one free for each group member");
            used[c] = true;
            totals[c] += &items[k].1;
            colors[c].push(k);
        }
    }
    let mut bins = Vec::new();
    for color in colors {
        let mut loads: Vec<Rational> = Vec::new();
        let mut color_bins: Vec<Vec<ItemId>> = Vec::new();
        for k in color {
            let s = &items[k].1;
            match loads.iter().position(|l| l + s <= Rational::one()) {
                Some(b) => {
                    loads[b] += s;
                    color_bins[b].push(items[k].0);
                }
                None => {
                    loads.push(s.clone());
                    color_bins.push(vec![items[k].0]);
                }
            }
        }
        bins.extend(color_bins);
    }
    bins
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Order {
    Input,
    Decreasing,
    Random(u64),
    /// A caller-supplied permutation of all item ids.
    Explicit(Vec<ItemId>),
}

pub fn first_fit_conflicts(inst: &Instance, order: &Order) -> Packing {
    let mut ids: Vec<ItemId> = (0..inst.n_items()).collect();
    match order {
        Order::Input => {}
        Order::Decreasing => ids.sort_by(|&a, &b| inst.size(b).cmp(inst.size(a)).then(a.cmp(&b))),
        Order::Random(seed) => ids.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed)),
        Order::Explicit(perm) => {
            let mut sorted = perm.clone();
            sorted.sort_unstable();
            assert!(
                sorted == ids,
                "explicit order must be a permutation of the item ids"
            );
            ids = perm.clone();
        }
    }
    let mut loads: Vec<Rational> = Vec::new();
    let mut members: Vec<Vec<bool>> = Vec::new();
    let mut bins: Vec<Vec<ItemId>> = Vec::new();
    for id in ids {
        let (s, g) = (inst.size(id), inst.group(id));
        match (0..bins.len()).find(|&b| !members[b][g] && &loads[b] + s <= Rational::one()) {
            Some(b) => {
                loads[b] += s;
                members[b][g] = true;
                bins[b].push(id);
            }
            None => {
                let mut m = vec![false; inst.n_groups()];
                m[g] = true;
                loads.push(s.clone());
                members.push(m);
                bins.push(vec![id]);
            }
        }
    }
    Packing::new(bins, "firstfit")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_packing;
    use crate::model::rational::rat;
    use proptest::prelude::*;

    #[test]
    fn coloring_hand_trace() {
        let i = Instance::new(2, vec![(rat(3, 5), 0), (rat(3, 5), 0), (rat(3, 5), 1)]).unwrap();
        let p = balanced_coloring(&i);
        assert_eq!(p.bins, vec![vec![0], vec![2], vec![1]]);
        assert!(check_packing(&i, &p).feasible);
        // colors {0,2} and {1}; color 0 weighs 6/5 and splits into two bins
        assert_eq!(p.num_bins(), 3);
        assert!(p.num_bins() <= instance_coloring_bound(&i));
        assert_eq!(instance_coloring_bound(&i), 4);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(balanced_coloring(&Instance::empty()).num_bins(), 0);
        assert_eq!(
            first_fit_conflicts(&Instance::empty(), &Order::Input).num_bins(),
            0
        );
    }

    #[test]
    fn first_fit_examples() {
        let ones = Instance::new(3, vec![(rat(1, 1), 0), (rat(1, 1), 1), (rat(1, 1), 2)]).unwrap();
        assert_eq!(first_fit_conflicts(&ones, &Order::Decreasing).num_bins(), 3);
        let halves = Instance::new(4, (0..4).map(|g| (rat(1, 2), g)).collect()).unwrap();
        assert_eq!(
            first_fit_conflicts(&halves, &Order::Decreasing).num_bins(),
            2
        );
        let same = Instance::new(1, vec![(rat(1, 10), 0), (rat(1, 10), 0)]).unwrap();
        assert_eq!(first_fit_conflicts(&same, &Order::Input).num_bins(), 2);
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (1usize..6).prop_flat_map(|g| {
            prop::collection::vec((1i64..=100, 0..g), g..30).prop_map(move |v| {
                let mut items: Vec<(Rational, usize)> =
                    v.into_iter().map(|(s, gr)| (rat(s, 100), gr)).collect();
                for (k, it) in items.iter_mut().enumerate().take(g) {
                    it.1 = k;
                }
                Instance::new(g, items).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn coloring_respects_bound(i in arb_instance()) {
            let p = balanced_coloring(&i);
            prop_assert!(check_packing(&i, &p).feasible);
            prop_assert!(p.num_bins() <= instance_coloring_bound(&i));
        }

        #[test]
        fn first_fit_feasible_for_all_orders(i in arb_instance(), seed in any::<u64>()) {
            for order in [Order::Input, Order::Decreasing, Order::Random(seed)] {
                prop_assert!(check_packing(&i, &first_fit_conflicts(&i, &order)).feasible);
            }
        }
    }
}
