//! Greedy packing of one type's small items: every bin takes the largest
//! remaining item of each group, and overflow advances some group to its
//! next item.

use crate::error::{GbpError, Result};
use crate::model::{GroupId, ItemId, Rational};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyBin {
    pub capacity: Rational,
    /// Groups already present in the bin; a small item of such a group is
    /// discarded instead of packed.
    pub blocked: BTreeSet<GroupId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GreedyOutcome {
    /// Items per bin, in the order of the input bins.
    pub bins: Vec<Vec<ItemId>>,
    pub discarded: Vec<ItemId>,
    /// Overflow replacements performed.
    pub advances: usize,
}

/// Packs `items` into `bins`. Each group is padded with zero-size dummies to
/// the number of bins, so every bin receives one element per group. On
/// overflow the group whose current item is not last and whose next item is
/// smallest relative to it (largest drop) advances, ties by group id.
pub fn greedy_pack(
    items: &[(ItemId, Rational, GroupId)],
    bins: &[GreedyBin],
) -> Result<GreedyOutcome> {
    let mut groups: BTreeMap<GroupId, Vec<(Rational, ItemId)>> = BTreeMap::new();
    for (id, s, g) in items {
        groups.entry(*g).or_default().push((s.clone(), *id));
    }
    for list in groups.values_mut() {
        list.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        if list.len() > bins.len() {
            return Err(GbpError::GuessRejected(format!(
                "{} items of one group for {} bins",
                list.len(),
                bins.len()
            )));
        }
    }
    let mut out = GreedyOutcome {
        bins: vec![Vec::new(); bins.len()],
        ..Default::default()
    };
    let zero = Rational::zero();
    for (b, bin) in bins.iter().enumerate() {
        let remaining_bins = bins.len() - b;
        // position of each group's pick within its padded list
        let mut pick: BTreeMap<GroupId, usize> = groups.keys().map(|&g| (g, 0)).collect();
        let size_at = |list: &Vec<(Rational, ItemId)>, k: usize| -> Rational {
            list.get(k).map_or_else(|| zero.clone(), |e| e.0.clone())
        };
        let mut load: Rational = groups.iter().map(|(g, list)| size_at(list, pick[g])).sum();
        while load > bin.capacity {
            let mut best: Option<(Rational, GroupId)> = None;
            for (g, list) in &groups {
                let k = pick[g];
                // the padded list has `remaining_bins` elements
                if k + 1 >= remaining_bins {
                    continue;
                }
                let drop = size_at(list, k) - size_at(list, k + 1);
                if best.as_ref().map_or(true, |(d, _)| drop > *d) {
                    best = Some((drop, *g));
                }
            }
            let Some((drop, g)) = best else {
                return Err(GbpError::GuessRejected(format!(
                    "greedy overflow in bin {b} with every group at its last item"
                )));
            };
            *pick.get_mut(&g).expect("group") += 1;
            load -= drop;
            out.advances += 1;
        }
        for (g, list) in groups.iter_mut() {
            let k = pick[g];
            if k < list.len() {
                let (_, id) = list.remove(k);
                if bin.blocked.contains(g) {
                    out.discarded.push(id);
                } else {
                    out.bins[b].push(id);
                }
            }
        }
    }
    if groups.values().any(|l| !l.is_empty()) {
        return Err(GbpError::Invariant("greedy left items unpacked".into()));
    }
    Ok(out)
}
