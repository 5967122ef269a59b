//! Slots, patterns, pattern assignments, tentative placement and the swap
//! procedure that removes conflicts among small-group large items.

use crate::error::{GbpError, Result};
use crate::model::rational::floor_usize;
use crate::model::{GroupId, ItemId, Rational};
use crate::shifting::{RoundedInstance, TableScope};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, HashSet};
use std::ops::ControlFlow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Group(GroupId),
    /// Any small group.
    U,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub rounded_size: Rational,
    pub label: Label,
}

/// Slots in canonical order (size descending, then label) plus the number of
/// kept items that fill each slot.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlotAlphabet {
    pub slots: Vec<Slot>,
    pub supply: Vec<usize>,
    /// Kept items per slot, in id order.
    pub members: Vec<Vec<ItemId>>,
}

impl SlotAlphabet {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot_of(&self, id: ItemId) -> Option<usize> {
        self.members.iter().position(|m| m.contains(&id))
    }
}

pub fn build_slot_alphabet(rinst: &RoundedInstance) -> SlotAlphabet {
    let mut map: BTreeMap<(std::cmp::Reverse<Rational>, Label), Vec<ItemId>> = BTreeMap::new();
    for table in &rinst.tables {
        let label = match table.scope {
            TableScope::Group(g) => Label::Group(g),
            TableScope::Merged => Label::U,
        };
        for class in table.kept() {
            map.entry((std::cmp::Reverse(class.rounded.clone()), label))
                .or_default()
                .extend(&class.members);
        }
    }
    let mut a = SlotAlphabet::default();
    for ((size, label), mut ids) in map {
        ids.sort_unstable();
        a.slots.push(Slot {
            rounded_size: size.0,
            label,
        });
        a.supply.push(ids.len());
        a.members.push(ids);
    }
    a
}

/// A multiset of slot indices, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    pub slots: Vec<usize>,
    pub total: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternSet {
    /// Index 0 is always the empty pattern.
    pub patterns: Vec<Pattern>,
    pub exhaustive: bool,
}

/// ⌊1/ε^{k+1}⌋.
pub fn pattern_cap(epsilon: &Rational, k: usize) -> usize {
    floor_usize(&(Rational::one() / crate::model::rational::pow(epsilon, k + 1)))
}

/// All slot multisets with at most `cap` slots, total at most 1, at most one
/// slot per large-group label and, when `respect_supply`, no slot used more
/// often than its supply. Stops after `budget` patterns.
pub fn enumerate_patterns(
    alphabet: &SlotAlphabet,
    cap: usize,
    budget: usize,
    respect_supply: bool,
) -> PatternSet {
    enumerate_patterns_within(alphabet, cap, &Rational::one(), budget, respect_supply)
}

/// As [`enumerate_patterns`] with total size at most `capacity`.
pub fn enumerate_patterns_within(
    alphabet: &SlotAlphabet,
    cap: usize,
    capacity: &Rational,
    budget: usize,
    respect_supply: bool,
) -> PatternSet {
    let mut out = vec![Pattern {
        slots: Vec::new(),
        total: Rational::zero(),
    }];
    let mut exhaustive = true;
    let mut current = Vec::new();
    let mut used_groups = HashSet::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        a: &SlotAlphabet,
        start: usize,
        cap: usize,
        capacity: &Rational,
        budget: usize,
        respect_supply: bool,
        total: &Rational,
        current: &mut Vec<usize>,
        used_groups: &mut HashSet<GroupId>,
        out: &mut Vec<Pattern>,
        exhaustive: &mut bool,
    ) {
        if current.len() == cap {
            return;
        }
        for s in start..a.len() {
            let slot = &a.slots[s];
            let next = total + &slot.rounded_size;
            if next > *capacity {
                continue;
            }
            if let Label::Group(g) = slot.label {
                if used_groups.contains(&g) {
                    continue;
                }
            }
            if respect_supply && current.iter().filter(|&&c| c == s).count() >= a.supply[s] {
                continue;
            }
            if out.len() >= budget {
                *exhaustive = false;
                return;
            }
            current.push(s);
            if let Label::Group(g) = slot.label {
                used_groups.insert(g);
            }
            out.push(Pattern {
                slots: current.clone(),
                total: next.clone(),
            });
            rec(
                a,
                s,
                cap,
                capacity,
                budget,
                respect_supply,
                &next,
                current,
                used_groups,
                out,
                exhaustive,
            );
            if let Label::Group(g) = slot.label {
                used_groups.remove(&g);
            }
            current.pop();
        }
    }
    rec(
        alphabet,
        0,
        cap,
        capacity,
        budget.max(1),
        respect_supply,
        &Rational::zero(),
        &mut current,
        &mut used_groups,
        &mut out,
        &mut exhaustive,
    );
    PatternSet {
        patterns: out,
        exhaustive,
    }
}

/// How many bins use each non-empty pattern; the other bins are empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternAssignment {
    /// `(pattern index, bin count)` with positive counts, by pattern index.
    pub counts: Vec<(usize, usize)>,
    pub bins: usize,
}

impl PatternAssignment {
    /// Pattern index of each bin in placement order.
    pub fn bin_patterns(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .counts
            .iter()
            .flat_map(|&(p, c)| std::iter::repeat(p).take(c))
            .collect();
        v.resize(self.bins, 0);
        v
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumStats {
    pub yielded: usize,
    pub nodes: usize,
    pub exhaustive: bool,
}

/// Visits every assignment of at most `bins` non-empty patterns whose slot
/// counts equal `supply` exactly. Patterns are visited in index order with
/// counts tried from high to low. `budget` caps the search nodes.
pub fn for_each_assignment(
    set: &PatternSet,
    supply: &[usize],
    bins: usize,
    budget: usize,
    mut visit: impl FnMut(&PatternAssignment) -> ControlFlow<()>,
) -> EnumStats {
    let pats = &set.patterns;
    let n_slots = supply.len();
    let mut mult: Vec<Vec<usize>> = vec![vec![0; n_slots]; pats.len()];
    for (i, p) in pats.iter().enumerate() {
        for &s in &p.slots {
            mult[i][s] += 1;
        }
    }
    // last pattern index that still contains each slot
    let mut last = vec![None; n_slots];
    for (i, m) in mult.iter().enumerate() {
        for s in 0..n_slots {
            if m[s] > 0 {
                last[s] = Some(i);
            }
        }
    }
    struct Ctx<'a, F> {
        mult: &'a [Vec<usize>],
        last: &'a [Option<usize>],
        remaining: Vec<usize>,
        counts: Vec<(usize, usize)>,
        bins: usize,
        budget: usize,
        stats: EnumStats,
        stopped: bool,
        visit: F,
    }
    fn rec<F: FnMut(&PatternAssignment) -> ControlFlow<()>>(
        c: &mut Ctx<'_, F>,
        i: usize,
        used: usize,
    ) {
        if c.stopped {
            return;
        }
        c.stats.nodes += 1;
        if c.stats.nodes > c.budget {
            c.stats.exhaustive = false;
            c.stopped = true;
            return;
        }
        if c.remaining.iter().all(|&r| r == 0) {
            c.stats.yielded += 1;
            let a = PatternAssignment {
                counts: c.counts.clone(),
                bins: c.bins,
            };
            if (c.visit)(&a).is_break() {
                c.stopped = true;
            }
            return;
        }
        if i >= c.mult.len() {
            return;
        }
        for (s, &r) in c.remaining.iter().enumerate() {
            if r > 0 && c.last[s].map_or(true, |l| l < i) {
                return;
            }
        }
        let m = &c.mult[i];
        let fits = (0..m.len())
            .filter(|&s| m[s] > 0)
            .map(|s| c.remaining[s] / m[s])
            .min()
            .unwrap_or(0);
        let max = fits.min(c.bins - used);
        for count in (0..=max).rev() {
            if count > 0 {
                for s in 0..m.len() {
                    c.remaining[s] -= m[s] * count;
                }
                c.counts.push((i, count));
            }
            rec(c, i + 1, used + count);
            if count > 0 {
                c.counts.pop();
                for s in 0..m.len() {
                    c.remaining[s] += m[s] * count;
                }
            }
            if c.stopped {
                return;
            }
        }
    }
    let mut ctx = Ctx {
        mult: &mult,
        last: &last,
        remaining: supply.to_vec(),
        counts: Vec::new(),
        bins,
        budget: budget.max(1),
        stats: EnumStats {
            exhaustive: true,
            ..Default::default()
        },
        stopped: false,
        visit: &mut visit,
    };
    // the empty pattern never covers supply; start at 1
    rec(&mut ctx, 1, 0);
    ctx.stats
}

/// Collects up to `budget` search nodes' worth of assignments.
pub fn enumerate_assignments(
    set: &PatternSet,
    supply: &[usize],
    bins: usize,
    budget: usize,
) -> (Vec<PatternAssignment>, EnumStats) {
    let mut out = Vec::new();
    let stats = for_each_assignment(set, supply, bins, budget, |a| {
        out.push(a.clone());
        ControlFlow::Continue(())
    });
    (out, stats)
}

/// Bins filled with items; `keys[b]` is the sorted slot multiset of bin `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotPacking {
    pub bins: Vec<Vec<ItemId>>,
    pub keys: Vec<Vec<usize>>,
}

/// Fills each bin's slots with unused members in id order. Large-group slots
/// are conflict-free by their labels; `U` slots may produce conflicts.
pub fn place_by_patterns(
    assignment: &PatternAssignment,
    set: &PatternSet,
    alphabet: &SlotAlphabet,
) -> Result<SlotPacking> {
    let mut next = vec![0usize; alphabet.len()];
    let mut bins = Vec::with_capacity(assignment.bins);
    let mut keys = Vec::with_capacity(assignment.bins);
    for p in assignment.bin_patterns() {
        let pattern = &set.patterns[p];
        let mut bin = Vec::with_capacity(pattern.slots.len());
        for &s in &pattern.slots {
            let id = *alphabet.members[s].get(next[s]).ok_or_else(|| {
                GbpError::Invariant(format!("slot {s} used more often than its supply"))
            })?;
            next[s] += 1;
            bin.push(id);
        }
        bins.push(bin);
        keys.push(pattern.slots.clone());
    }
    if next != alphabet.supply {
        return Err(GbpError::Invariant(
            "assignment does not use every slot member".into(),
        ));
    }
    Ok(SlotPacking { bins, keys })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SwapStats {
    pub swaps: usize,
    /// Candidate partners examined over all searches.
    pub examined: usize,
}

/// Number of same-group pairs inside bins.
pub fn count_conflicts(bins: &[Vec<ItemId>], group: impl Fn(ItemId) -> GroupId) -> usize {
    bins.iter()
        .map(|b| {
            let mut gs: Vec<GroupId> = b.iter().map(|&i| group(i)).collect();
            gs.sort_unstable();
            gs.windows(2).filter(|w| w[0] == w[1]).count()
        })
        .sum()
}

/// Removes conflicts by exchanging `U` items of equal rounded size between
/// bins. Scans the lowest bin and lowest item id first and takes the lowest-id
/// partner whose exchange creates no new conflict.
pub fn swapping(
    packing: &SlotPacking,
    alphabet: &SlotAlphabet,
    rinst: &RoundedInstance,
) -> Result<(SlotPacking, SwapStats)> {
    let group = |id: ItemId| rinst.base.group(id);
    let mut out = packing.clone();
    let mut stats = SwapStats::default();
    let mut location: BTreeMap<ItemId, usize> = BTreeMap::new();
    for (b, bin) in out.bins.iter().enumerate() {
        for &id in bin {
            location.insert(id, b);
        }
    }
    let mut slot_of: BTreeMap<ItemId, usize> = BTreeMap::new();
    for (s, members) in alphabet.members.iter().enumerate() {
        if alphabet.slots[s].label == Label::U {
            for &id in members {
                slot_of.insert(id, s);
            }
        }
    }
    loop {
        let conflict = out.bins.iter().enumerate().find_map(|(b, bin)| {
            let mut ids = bin.clone();
            ids.sort_unstable();
            ids.iter()
                .copied()
                .find(|&l| bin.iter().any(|&o| o != l && group(o) == group(l)))
                .map(|l| (b, l))
        });
        let Some((b, l)) = conflict else { break };
        let s = *slot_of.get(&l).ok_or_else(|| {
            GbpError::Invariant(format!("conflicting item {l} is not in a small-group slot"))
        })?;
        let groups_without = |bin: &Vec<ItemId>, skip: ItemId| -> HashSet<GroupId> {
            bin.iter()
                .copied()
                .filter(|&i| i != skip)
                .map(group)
                .collect()
        };
        let in_b = groups_without(&out.bins[b], l);
        let mut partner = None;
        for &y in &alphabet.members[s] {
            let c = location[&y];
            if c == b {
                continue;
            }
            stats.examined += 1;
            if !in_b.contains(&group(y)) && !groups_without(&out.bins[c], y).contains(&group(l)) {
                partner = Some((y, c));
                break;
            }
        }
        let Some((y, c)) = partner else {
            return Err(GbpError::GuessRejected(format!(
                "no good swap for item {l} in bin {b}"
            )));
        };
        let pl = out.bins[b].iter().position(|&i| i == l).expect("l in b");
        let py = out.bins[c].iter().position(|&i| i == y).expect("y in c");
        out.bins[b][pl] = y;
        out.bins[c][py] = l;
        location.insert(y, b);
        location.insert(l, c);
        stats.swaps += 1;
    }
    Ok((out, stats))
}

/// First-Fit-decreasing over the kept slot items, respecting real groups.
/// Returns `None` when more than `bins` bins are needed.
pub fn heuristic_placement(
    alphabet: &SlotAlphabet,
    rinst: &RoundedInstance,
    bins: usize,
) -> Option<SlotPacking> {
    let mut items: Vec<(usize, ItemId)> = alphabet
        .members
        .iter()
        .enumerate()
        .flat_map(|(s, m)| m.iter().map(move |&id| (s, id)))
        .collect();
    // the alphabet is sorted by size descending, so slot order is decreasing size
    items.sort();
    let mut out = SlotPacking {
        bins: vec![Vec::new(); bins],
        keys: vec![Vec::new(); bins],
    };
    let mut loads = vec![Rational::zero(); bins];
    for (s, id) in items {
        let size = &alphabet.slots[s].rounded_size;
        let g = rinst.base.group(id);
        let b = (0..bins).find(|&b| {
            &loads[b] + size <= Rational::one()
                && out.bins[b].iter().all(|&o| rinst.base.group(o) != g)
        })?;
        loads[b] += size;
        out.bins[b].push(id);
        out.keys[b].push(s);
    }
    for k in &mut out.keys {
        k.sort_unstable();
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounting::ExtraCause;
    use crate::model::rational::rat;
    use crate::model::Instance;
    use crate::shifting::{linear_shift, ShiftTable};

    fn alphabet_of(slots: &[(Rational, Label, usize)]) -> SlotAlphabet {
        let mut a = SlotAlphabet::default();
        let mut next = 0;
        for (size, label, supply) in slots {
            a.slots.push(Slot {
                rounded_size: size.clone(),
                label: *label,
            });
            a.supply.push(*supply);
            a.members.push((next..next + supply).collect());
            next += supply;
        }
        a
    }

    #[test]
    fn pattern_examples() {
        let a = alphabet_of(&[(rat(1, 2), Label::U, 5)]);
        let set = enumerate_patterns(&a, 2, 1000, false);
        let non_empty: Vec<Vec<usize>> =
            set.patterns[1..].iter().map(|p| p.slots.clone()).collect();
        assert_eq!(non_empty, vec![vec![0], vec![0, 0]]);
        assert!(set.exhaustive);
        let empty = enumerate_patterns(&SlotAlphabet::default(), 3, 10, false);
        assert_eq!(empty.patterns.len(), 1);
        let full = alphabet_of(&[(rat(1, 1), Label::U, 3), (rat(1, 4), Label::U, 3)]);
        let set = enumerate_patterns(&full, 4, 1000, false);
        for p in &set.patterns {
            if p.slots.contains(&0) {
                assert_eq!(p.slots, vec![0]);
            }
        }
    }

    #[test]
    fn one_slot_per_large_group() {
        let a = alphabet_of(&[
            (rat(1, 4), Label::Group(0), 2),
            (rat(1, 5), Label::Group(0), 2),
        ]);
        let set = enumerate_patterns(&a, 4, 1000, false);
        assert!(set.patterns.iter().all(|p| p.slots.len() <= 1));
    }

    #[test]
    fn pattern_budget_truncates() {
        let a = alphabet_of(&[(rat(1, 10), Label::U, 10), (rat(1, 9), Label::U, 10)]);
        let set = enumerate_patterns(&a, 9, 5, false);
        assert_eq!(set.patterns.len(), 5);
        assert!(!set.exhaustive);
    }

    #[test]
    fn assignment_examples() {
        let a = SlotAlphabet::default();
        let set = enumerate_patterns(&a, 2, 10, false);
        let (all, stats) = enumerate_assignments(&set, &a.supply, 3, 100);
        assert_eq!(
            all,
            vec![PatternAssignment {
                counts: vec![],
                bins: 3
            }]
        );
        assert!(stats.exhaustive);

        let a = alphabet_of(&[(rat(3, 5), Label::U, 2)]);
        let set = enumerate_patterns(&a, 2, 10, false);
        let (all, _) = enumerate_assignments(&set, &a.supply, 2, 100);
        assert_eq!(
            all,
            vec![PatternAssignment {
                counts: vec![(1, 2)],
                bins: 2
            }]
        );
        let (none, _) = enumerate_assignments(&set, &a.supply, 1, 100);
        assert!(none.is_empty());
    }

    #[test]
    fn assignments_match_supply() {
        let a = alphabet_of(&[
            (rat(1, 2), Label::U, 3),
            (rat(1, 3), Label::Group(0), 2),
            (rat(1, 4), Label::U, 2),
        ]);
        let set = enumerate_patterns(&a, 3, 1000, true);
        let (all, stats) = enumerate_assignments(&set, &a.supply, 4, 1_000_000);
        assert!(stats.exhaustive && !all.is_empty());
        for asg in &all {
            let mut used = vec![0; a.len()];
            let mut bins = 0;
            for &(p, c) in &asg.counts {
                bins += c;
                for &s in &set.patterns[p].slots {
                    used[s] += c;
                }
            }
            assert_eq!(used, a.supply);
            assert!(bins <= 4);
            let placed = place_by_patterns(asg, &set, &a).unwrap();
            assert_eq!(placed.bins.len(), 4);
        }
        let mut sorted = all.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
    }

    fn merged_fixture(groups: &[usize], size: Rational) -> (RoundedInstance, SlotAlphabet) {
        let n_groups = groups.iter().max().map_or(0, |g| g + 1);
        let inst = Instance::new(
            n_groups,
            groups.iter().map(|&g| (size.clone(), g)).collect(),
        )
        .unwrap();
        let mut r = RoundedInstance::identity(&inst);
        let ids: Vec<usize> = (0..groups.len()).collect();
        let mut table: ShiftTable = linear_shift(
            TableScope::Merged,
            &ids,
            |i| inst.size(i).clone(),
            groups.len(),
        );
        table.classes[0].discarded = false;
        r.add_table(table, ExtraCause::ShiftSwap);
        let a = build_slot_alphabet(&r);
        (r, a)
    }

    #[test]
    fn swap_resolves_planted_conflict() {
        // bins [0,1] and [2,3]; items 0 and 1 share group 0
        let (r, a) = merged_fixture(&[0, 0, 1, 2], rat(1, 3));
        let tentative = SlotPacking {
            bins: vec![vec![0, 1], vec![2, 3]],
            keys: vec![vec![0, 0], vec![0, 0]],
        };
        assert_eq!(count_conflicts(&tentative.bins, |i| r.base.group(i)), 1);
        let (fixed, stats) = swapping(&tentative, &a, &r).unwrap();
        assert_eq!(stats.swaps, 1);
        assert_eq!(fixed.bins, vec![vec![2, 1], vec![0, 3]]);
        assert_eq!(count_conflicts(&fixed.bins, |i| r.base.group(i)), 0);
    }

    #[test]
    fn swap_identity_and_failure() {
        let (r, a) = merged_fixture(&[0, 1], rat(1, 3));
        let ok = SlotPacking {
            bins: vec![vec![0, 1]],
            keys: vec![vec![0, 0]],
        };
        assert_eq!(swapping(&ok, &a, &r).unwrap().0, ok);
        let (r, a) = merged_fixture(&[0, 0], rat(1, 3));
        let stuck = SlotPacking {
            bins: vec![vec![0, 1]],
            keys: vec![vec![0, 0]],
        };
        assert!(swapping(&stuck, &a, &r).is_err());
    }

    #[test]
    fn placement_reports_conflicts_from_u_slots() {
        let (r, a) = merged_fixture(&[0, 0], rat(1, 3));
        let set = enumerate_patterns(&a, 3, 100, true);
        let (all, _) = enumerate_assignments(&set, &a.supply, 1, 100);
        let placed = place_by_patterns(&all[0], &set, &a).unwrap();
        assert_eq!(count_conflicts(&placed.bins, |i| r.base.group(i)), 1);
        let empty = place_by_patterns(
            &PatternAssignment {
                counts: vec![],
                bins: 0,
            },
            &set,
            &SlotAlphabet::default(),
        );
        assert!(empty.is_err() || empty.unwrap().bins.is_empty());
    }
}
