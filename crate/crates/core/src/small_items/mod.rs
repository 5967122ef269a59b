//! Packing of the small items into the space left by the large and medium
//! items: bin types, enumeration of non-negligible items for tight bins,
//! eviction, the partition polytope and a greedy pass per type.

pub mod greedy;

pub use greedy::{greedy_pack, GreedyBin, GreedyOutcome};

use crate::accounting::{DiscardPool, ExtraCause};
use crate::error::{GbpError, Result};
use crate::heuristics::balanced_coloring_bins;
use crate::lp::{
    analyze_fractional, find_vertex, PartitionPolytope, PolyItem, PolyType, VertexOutcome,
};
use crate::model::rational::{ceil_usize, floor_usize, int, pow};
use crate::model::{GroupId, Instance, ItemId, Rational};
use crate::patterns::{
    enumerate_assignments, enumerate_patterns_within, Label, Slot, SlotAlphabet, SlotPacking,
};
use crate::shifting::{RoundedInstance, TableScope};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinType {
    pub bins: Vec<usize>,
    pub free: Rational,
    /// Items per group in the type's bins, small-group large items excluded.
    pub content: BTreeMap<GroupId, usize>,
}

/// Groups bins by identical slot multiset; free capacity is one minus the
/// rounded load. Types are ordered by their first bin.
pub fn compute_bin_types(placement: &SlotPacking, rinst: &RoundedInstance) -> Vec<BinType> {
    let mut index: BTreeMap<&Vec<usize>, usize> = BTreeMap::new();
    let mut types: Vec<BinType> = Vec::new();
    for (b, key) in placement.keys.iter().enumerate() {
        let t = *index.entry(key).or_insert_with(|| {
            let load: Rational = placement.bins[b]
                .iter()
                .map(|&id| rinst.effective_size(id))
                .sum();
            types.push(BinType {
                bins: Vec::new(),
                free: Rational::one() - load,
                content: BTreeMap::new(),
            });
            types.len() - 1
        });
        types[t].bins.push(b);
        for &id in &placement.bins[b] {
            if rinst.scope(id) != Some(TableScope::Merged) {
                *types[t].content.entry(rinst.base.group(id)).or_insert(0) += 1;
            }
        }
    }
    types
}

/// A bin as seen by the enumeration: free space from rounded sizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumBin {
    pub free: Rational,
    /// Free space at the start of the current iteration.
    pub prev_free: Rational,
    /// Items per group, small-group large items excluded; includes enumerated slots.
    pub content: BTreeMap<GroupId, usize>,
    /// Groups of the small-group large items in the bin.
    pub il_groups: BTreeSet<GroupId>,
    /// Enumerated small-item slots as (rounded size, group).
    pub slots: Vec<(Rational, GroupId)>,
    pub padding: bool,
    pub in_e: bool,
}

impl EnumBin {
    pub fn blocked(&self) -> BTreeSet<GroupId> {
        self.content
            .keys()
            .chain(&self.il_groups)
            .copied()
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumState {
    pub bins: Vec<EnumBin>,
    pub types: Vec<Vec<usize>>,
    /// Items of each group claimed by guesses: slots plus discarded first classes.
    pub claimed: BTreeMap<GroupId, usize>,
    pub shift_discards: BTreeMap<GroupId, usize>,
    pub padding_bins: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmallInput {
    pub epsilon: Rational,
    pub opt_guess: usize,
    /// Small items per group, by non-increasing size then id.
    pub by_group: BTreeMap<GroupId, Vec<(Rational, ItemId)>>,
    pub state: EnumState,
    /// Bins below this index are core bins.
    pub n_core: usize,
}

impl SmallInput {
    pub fn new(
        inst: &Instance,
        rinst: &RoundedInstance,
        placement: &SlotPacking,
        small: &[ItemId],
        epsilon: &Rational,
        opt_guess: usize,
    ) -> SmallInput {
        let mut by_group: BTreeMap<GroupId, Vec<(Rational, ItemId)>> = BTreeMap::new();
        for &id in small {
            by_group
                .entry(inst.group(id))
                .or_default()
                .push((inst.size(id).clone(), id));
        }
        for list in by_group.values_mut() {
            list.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        }
        let types = compute_bin_types(placement, rinst);
        let mut bins = Vec::with_capacity(placement.bins.len());
        for (b, items) in placement.bins.iter().enumerate() {
            let load: Rational = items.iter().map(|&id| rinst.effective_size(id)).sum();
            let mut content = BTreeMap::new();
            let mut il_groups = BTreeSet::new();
            for &id in items {
                if rinst.scope(id) == Some(TableScope::Merged) {
                    il_groups.insert(inst.group(id));
                } else {
                    *content.entry(inst.group(id)).or_insert(0) += 1;
                }
            }
            let free = Rational::one() - load;
            debug_assert!(types.iter().any(|t| t.bins.contains(&b)));
            bins.push(EnumBin {
                prev_free: free.clone(),
                free,
                content,
                il_groups,
                slots: Vec::new(),
                padding: false,
                in_e: false,
            });
        }
        let state = EnumState {
            bins,
            types: types.into_iter().map(|t| t.bins).collect(),
            claimed: BTreeMap::new(),
            shift_discards: BTreeMap::new(),
            padding_bins: 0,
        };
        SmallInput {
            epsilon: epsilon.clone(),
            opt_guess,
            by_group,
            n_core: placement.bins.len(),
            state,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmallBudgets {
    /// Search nodes of the enumeration, leaves included.
    pub enum_budget: usize,
    /// Replaces ⌊1/ε⌋+5 as the last iteration index.
    pub alpha_override: Option<usize>,
}

impl Default for SmallBudgets {
    fn default() -> Self {
        SmallBudgets {
            enum_budget: 10_000,
            alpha_override: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumSummary {
    pub nodes: usize,
    pub leaves: usize,
    pub exhaustive: bool,
}

/// ⌊1/ε⌋ + 5.
pub fn alpha(epsilon: &Rational) -> usize {
    floor_usize(&(Rational::one() / epsilon)) + 5
}

/// One guess for a significant group inside a type: how many of its items go
/// there and the rounded size of each kept class.
#[derive(Clone, Debug, PartialEq, Eq)]
struct GroupGuess {
    group: GroupId,
    count: usize,
    /// Size of the discarded first class.
    first_class: usize,
    /// (rounded size, class size) for classes 2, 3, ...
    classes: Vec<(Rational, usize)>,
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

struct Enumerator<'a, F> {
    input: &'a SmallInput,
    alpha: usize,
    pad_to: usize,
    max_slots: usize,
    max_significant: usize,
    budget: usize,
    summary: EnumSummary,
    stopped: bool,
    visit: F,
}

impl<'a, F: FnMut(&EnumState) -> ControlFlow<()>> Enumerator<'a, F> {
    fn eps(&self) -> &Rational {
        &self.input.epsilon
    }

    fn tick(&mut self) -> bool {
        self.summary.nodes += 1;
        if self.summary.nodes > self.budget {
            self.summary.exhaustive = false;
            self.stopped = true;
        }
        !self.stopped
    }

    fn leaf(&mut self, state: &EnumState) {
        if !self.tick() {
            return;
        }
        self.summary.leaves += 1;
        if (self.visit)(state).is_break() {
            self.stopped = true;
        }
    }

    fn iteration(&mut self, mut state: EnumState, h: usize) {
        if h > self.alpha {
            return self.leaf(&state);
        }
        for b in &mut state.bins {
            b.prev_free = b.free.clone();
            if h == 0 {
                b.in_e = b.free > Rational::zero() && b.free < *self.eps();
            }
        }
        let pending: Vec<usize> = (0..state.types.len())
            .filter(|&t| state.bins[state.types[t][0]].in_e)
            .collect();
        if pending.is_empty() {
            // E_h is empty, so every later iteration is a no-op
            return self.leaf(&state);
        }
        self.process(state, h, &pending, 0);
    }

    fn process(&mut self, mut state: EnumState, h: usize, pending: &[usize], i: usize) {
        if self.stopped {
            return;
        }
        if i == pending.len() {
            let eps = self.eps().clone();
            for b in &mut state.bins {
                if b.in_e {
                    b.in_e = b.free > Rational::zero() && b.free < &eps * &b.prev_free;
                }
            }
            return self.iteration(state, h + 1);
        }
        let t = pending[i];
        self.pad(&mut state, t);
        let size = state.types[t].len();
        let first = &state.bins[state.types[t][0]];
        let f = first.free.clone();
        let forbidden: BTreeSet<GroupId> = first.content.keys().copied().collect();
        let eps2 = self.eps() * self.eps();
        let min_count = ceil_usize(&(pow(self.eps(), 4) * int(size))).max(1);
        let mut candidates: Vec<(GroupId, Vec<Rational>)> = Vec::new();
        for (&g, items) in &self.input.by_group {
            if forbidden.contains(&g) {
                continue;
            }
            let from = *state.claimed.get(&g).unwrap_or(&0);
            let sizes: Vec<Rational> = items[from.min(items.len())..]
                .iter()
                .map(|e| e.0.clone())
                .filter(|s| *s > &eps2 * &f && *s <= f)
                .collect();
            if sizes.len() >= min_count {
                candidates.push((g, sizes));
            }
        }
        let q = floor_usize(&(pow(self.eps(), 3) * int(size))).max(1);
        let top = candidates.len().min(self.max_significant);
        for k in 0..=top {
            let mut combo: Vec<usize> = (0..k).collect();
            loop {
                if k == 0 {
                    if !self.tick() {
                        return;
                    }
                    self.process(state.clone(), h, pending, i + 1);
                } else {
                    let per_group: Vec<Vec<GroupGuess>> = combo
                        .iter()
                        .map(|&c| {
                            self.group_guesses(
                                candidates[c].0,
                                &candidates[c].1,
                                size,
                                q,
                                min_count,
                            )
                        })
                        .collect();
                    self.choose(&state, h, pending, i, t, &per_group, &mut Vec::new());
                }
                if self.stopped || k == 0 || !next_combination(&mut combo, candidates.len()) {
                    break;
                }
            }
            if self.stopped {
                return;
            }
        }
    }

    fn pad(&self, state: &mut EnumState, t: usize) {
        let have = state.types[t].len();
        if have >= self.pad_to {
            return;
        }
        let mut template = state.bins[state.types[t][0]].clone();
        template.padding = true;
        template.il_groups.clear();
        for _ in have..self.pad_to {
            state.types[t].push(state.bins.len());
            state.bins.push(template.clone());
            state.padding_bins += 1;
        }
    }

    /// Counts from high to low; for each count, non-increasing representative
    /// sequences over the distinct candidate sizes, largest first.
    fn group_guesses(
        &self,
        g: GroupId,
        sizes: &[Rational],
        t_size: usize,
        q: usize,
        min_count: usize,
    ) -> Vec<GroupGuess> {
        let mut distinct: Vec<Rational> = sizes.to_vec();
        distinct.dedup();
        let mut out = Vec::new();
        let max_count = sizes.len().min(t_size);
        for count in (min_count..=max_count).rev() {
            let m = count.div_ceil(q);
            let first_class = q.min(count);
            let class_sizes: Vec<usize> = (1..m)
                .map(|c| if c + 1 == m { count - q * (m - 1) } else { q })
                .collect();
            let mut idx = vec![0usize; m - 1];
            loop {
                out.push(GroupGuess {
                    group: g,
                    count,
                    first_class,
                    classes: idx
                        .iter()
                        .zip(&class_sizes)
                        .map(|(&d, &n)| (distinct[d].clone(), n))
                        .collect(),
                });
                if out.len() > self.budget {
                    return out;
                }
                // next non-decreasing index sequence
                let Some(p) = (0..idx.len()).rev().find(|&p| idx[p] + 1 < distinct.len()) else {
                    break;
                };
                idx[p] += 1;
                let v = idx[p];
                for x in idx.iter_mut().skip(p + 1) {
                    *x = v;
                }
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn choose(
        &mut self,
        state: &EnumState,
        h: usize,
        pending: &[usize],
        i: usize,
        t: usize,
        per_group: &[Vec<GroupGuess>],
        chosen: &mut Vec<GroupGuess>,
    ) {
        if self.stopped {
            return;
        }
        if chosen.len() < per_group.len() {
            for guess in &per_group[chosen.len()] {
                chosen.push(guess.clone());
                self.choose(state, h, pending, i, t, per_group, chosen);
                chosen.pop();
                if self.stopped {
                    return;
                }
            }
            return;
        }
        let mut slots: BTreeMap<(std::cmp::Reverse<Rational>, GroupId), usize> = BTreeMap::new();
        for guess in chosen.iter() {
            for (r, n) in &guess.classes {
                *slots
                    .entry((std::cmp::Reverse(r.clone()), guess.group))
                    .or_insert(0) += n;
            }
        }
        let mut alphabet = SlotAlphabet::default();
        for ((r, g), n) in slots {
            alphabet.slots.push(Slot {
                rounded_size: r.0,
                label: Label::Group(g),
            });
            alphabet.supply.push(n);
            alphabet.members.push(Vec::new());
        }
        let size = state.types[t].len();
        let f = state.bins[state.types[t][0]].free.clone();
        let remaining = self.budget.saturating_sub(self.summary.nodes);
        let set = enumerate_patterns_within(&alphabet, self.max_slots, &f, remaining.max(1), true);
        if !set.exhaustive {
            self.summary.exhaustive = false;
        }
        let (assignments, stats) =
            enumerate_assignments(&set, &alphabet.supply, size, remaining.max(1));
        if !stats.exhaustive {
            self.summary.exhaustive = false;
        }
        for a in assignments {
            if !self.tick() {
                return;
            }
            let mut next = state.clone();
            let members = next.types[t].clone();
            let mut split: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (&b, p) in members.iter().zip(a.bin_patterns()) {
                split.entry(p).or_default().push(b);
                let bin = &mut next.bins[b];
                for &s in &set.patterns[p].slots {
                    let slot = &alphabet.slots[s];
                    let Label::Group(g) = slot.label else {
                        unreachable!("enumerated slots carry a group")
                    };
                    bin.free -= &slot.rounded_size;
                    bin.slots.push((slot.rounded_size.clone(), g));
                    *bin.content.entry(g).or_insert(0) += 1;
                }
            }
            let mut parts = split.into_values();
            next.types[t] = parts.next().expect("type has bins");
            next.types.extend(parts);
            for guess in chosen.iter() {
                *next.claimed.entry(guess.group).or_insert(0) += guess.count;
                *next.shift_discards.entry(guess.group).or_insert(0) += guess.first_class;
            }
            self.process(next, h, pending, i + 1);
            if self.stopped {
                return;
            }
        }
    }
}

/// Depth-first enumeration over iterations 0..=α. In each iteration every
/// type whose bins are tight (0 < f < ε at the start, then shrinking by more
/// than a factor ε per iteration) is padded to ⌈1/ε⁴⌉ bins, and the
/// enumeration guesses its significant groups (smallest subsets first), the
/// number of items and class representatives per group, and one t-pattern
/// per bin. Each complete guess is passed to `visit`.
pub fn recursive_enum(
    input: &SmallInput,
    budgets: &SmallBudgets,
    visit: impl FnMut(&EnumState) -> ControlFlow<()>,
) -> EnumSummary {
    let eps = &input.epsilon;
    let mut e = Enumerator {
        input,
        alpha: budgets.alpha_override.unwrap_or_else(|| alpha(eps)),
        pad_to: ceil_usize(&(Rational::one() / pow(eps, 4))),
        max_slots: floor_usize(&(Rational::one() / (eps * eps))),
        max_significant: floor_usize(&(Rational::one() / pow(eps, 6))),
        budget: budgets.enum_budget,
        summary: EnumSummary {
            exhaustive: true,
            ..Default::default()
        },
        stopped: false,
        visit,
    };
    e.iteration(input.state.clone(), 0);
    let mut summary = e.summary;
    if e.stopped && summary.nodes <= e.budget {
        // stopped by the visitor
        summary.exhaustive = summary.exhaustive && summary.nodes <= e.budget;
    }
    summary
}

/// Real items placed into enumerated slots, per bin, as (id, slot size).
pub type SlotFill = Vec<Vec<(ItemId, Rational)>>;

/// Selects the actual items for enumerated slots: per group, the largest
/// items fill the discarded first classes, then the slots in order of
/// decreasing rounded size. Returns the fill and the unclaimed small items.
pub fn fill_classes(
    input: &SmallInput,
    state: &EnumState,
    pool: &mut DiscardPool,
) -> Result<(SlotFill, Vec<ItemId>)> {
    let mut fill: SlotFill = vec![Vec::new(); state.bins.len()];
    let mut rest = Vec::new();
    for (&g, items) in &input.by_group {
        let claimed = *state.claimed.get(&g).unwrap_or(&0);
        let discards = *state.shift_discards.get(&g).unwrap_or(&0);
        if claimed > items.len() {
            return Err(GbpError::GuessRejected(format!(
                "group {g} has fewer items than guessed"
            )));
        }
        let mut slots: Vec<(Rational, usize)> = Vec::new();
        for (b, bin) in state.bins.iter().enumerate() {
            for (r, sg) in &bin.slots {
                if *sg == g {
                    slots.push((r.clone(), b));
                }
            }
        }
        slots.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        if discards + slots.len() != claimed {
            return Err(GbpError::Invariant(format!(
                "group {g}: claimed count does not match slots"
            )));
        }
        for (_, id) in &items[..discards] {
            pool.push(*id, ExtraCause::EnumShift);
        }
        for ((s, id), (r, b)) in items[discards..claimed].iter().zip(&slots) {
            if s > r {
                return Err(GbpError::GuessRejected(format!(
                    "item {id} exceeds its class representative"
                )));
            }
            if state.bins[*b].il_groups.contains(&g) {
                pool.push(*id, ExtraCause::EnumConflict);
            } else {
                fill[*b].push((*id, r.clone()));
            }
        }
        rest.extend(items[claimed..].iter().map(|e| e.1));
    }
    rest.sort_unstable();
    Ok((fill, rest))
}

/// From every bin still tight after the last iteration, evicts the largest
/// enumerated item with size at least f/ε whose group has had fewer than
/// ε·opt_guess evictions.
pub fn evict_phase(
    input: &SmallInput,
    state: &mut EnumState,
    fill: &mut SlotFill,
    counters: &mut BTreeMap<GroupId, usize>,
    pool: &mut DiscardPool,
) -> Result<usize> {
    let eps = &input.epsilon;
    let limit = eps * int(input.opt_guess);
    let group_of: BTreeMap<ItemId, GroupId> = input
        .by_group
        .iter()
        .flat_map(|(&g, v)| v.iter().map(move |e| (e.1, g)))
        .collect();
    let size_of: BTreeMap<ItemId, &Rational> = input
        .by_group
        .values()
        .flatten()
        .map(|e| (e.1, &e.0))
        .collect();
    let mut evicted = 0;
    for b in 0..state.bins.len() {
        if !state.bins[b].in_e {
            continue;
        }
        let threshold = &state.bins[b].free / eps;
        let pick = fill[b]
            .iter()
            .enumerate()
            .filter(|(_, (id, _))| {
                *size_of[id] >= threshold && int(*counters.get(&group_of[id]).unwrap_or(&0)) < limit
            })
            .max_by(|a, b| {
                size_of[&a.1 .0]
                    .cmp(size_of[&b.1 .0])
                    .then(b.1 .0.cmp(&a.1 .0))
            })
            .map(|(k, _)| k);
        let Some(k) = pick else {
            return Err(GbpError::GuessRejected(format!(
                "no item can be evicted from tight bin {b}"
            )));
        };
        let (id, r) = fill[b].remove(k);
        let g = group_of[&id];
        *counters.entry(g).or_insert(0) += 1;
        pool.push(id, ExtraCause::Eviction);
        let bin = &mut state.bins[b];
        bin.free += &r;
        if let Some(c) = bin.content.get_mut(&g) {
            *c -= 1;
            if *c == 0 {
                bin.content.remove(&g);
            }
        }
        debug_assert!(bin.free >= threshold);
        evicted += 1;
    }
    Ok(evicted)
}

/// Bins regrouped by (free space, group content) after eviction, in order of
/// their first bin.
pub fn regroup_types(state: &EnumState) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut index: BTreeMap<(Rational, Vec<(GroupId, usize)>), usize> = BTreeMap::new();
    for (b, bin) in state.bins.iter().enumerate() {
        let key = (
            bin.free.clone(),
            bin.content.iter().map(|(g, c)| (*g, *c)).collect(),
        );
        let t = *index.entry(key).or_insert_with(|| {
            out.push(Vec::new());
            out.len() - 1
        });
        out[t].push(b);
    }
    out
}

/// The polytope over the remaining items, the regrouped types and a fresh
/// empty type of ⌈ε·opt_guess⌉ bins appended last.
pub fn build_partition_polytope(
    inst_sizes: &BTreeMap<ItemId, (Rational, GroupId)>,
    rest: &[ItemId],
    state: &EnumState,
    types: &[Vec<usize>],
    epsilon: &Rational,
    opt_guess: usize,
) -> PartitionPolytope {
    let items = rest
        .iter()
        .map(|&id| PolyItem {
            id,
            size: inst_sizes[&id].0.clone(),
            group: inst_sizes[&id].1,
        })
        .collect();
    let mut ptypes: Vec<PolyType> = types
        .iter()
        .map(|bins| {
            let mut content = BTreeMap::new();
            for &b in bins {
                for (g, c) in &state.bins[b].content {
                    *content.entry(*g).or_insert(0) += c;
                }
            }
            PolyType {
                bins: bins.len(),
                free: state.bins[bins[0]].free.clone(),
                extra: false,
                content,
            }
        })
        .collect();
    ptypes.push(PolyType {
        bins: ceil_usize(&(epsilon * int(opt_guess))),
        free: Rational::one(),
        extra: true,
        content: BTreeMap::new(),
    });
    PartitionPolytope::new(items, ptypes, epsilon.clone())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypePartition {
    /// Item ids per polytope type.
    pub per_type: Vec<Vec<ItemId>>,
    pub fractional: Vec<ItemId>,
    pub fractional_groups: usize,
}

/// Integral coordinates assign items to types; items with a fractional
/// coordinate are set aside.
pub fn partition_items(
    p: &PartitionPolytope,
    v: &crate::lp::VertexSolution,
) -> Result<TypePartition> {
    let stats = analyze_fractional(p, v)?;
    let mut out = TypePartition {
        per_type: vec![Vec::new(); p.types.len()],
        ..Default::default()
    };
    let frac: BTreeSet<usize> = stats.fractional_items.iter().copied().collect();
    for (k, &(i, t)) in p.vars.iter().enumerate() {
        if !frac.contains(&i) && v.values[k].is_one() {
            out.per_type[t].push(p.items[i].id);
        }
    }
    out.fractional = stats
        .fractional_items
        .iter()
        .map(|&i| p.items[i].id)
        .collect();
    out.fractional_groups = stats.fractional_groups;
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SmallStats {
    pub enum_nodes: usize,
    pub enum_leaves: usize,
    pub exhaustive: bool,
    pub rejected_leaves: usize,
    pub fallback: bool,
    pub padding_bins: usize,
    pub evictions: usize,
    pub fractional_items: usize,
    pub fractional_groups: usize,
    pub greedy_discards: usize,
    pub types: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SmallOutcome {
    /// Small items added to each core bin.
    pub core: Vec<Vec<ItemId>>,
    /// Additional non-empty bins with the cause they are charged to.
    pub extra: Vec<(Vec<ItemId>, ExtraCause)>,
    pub pool: DiscardPool,
    pub stats: SmallStats,
}

fn finish(input: &SmallInput, state: &EnumState) -> Result<SmallOutcome> {
    let mut state = state.clone();
    let mut pool = DiscardPool::default();
    let (mut fill, rest) = fill_classes(input, &state, &mut pool)?;
    let mut counters = BTreeMap::new();
    let evictions = evict_phase(input, &mut state, &mut fill, &mut counters, &mut pool)?;
    let types = regroup_types(&state);
    let sizes: BTreeMap<ItemId, (Rational, GroupId)> = input
        .by_group
        .iter()
        .flat_map(|(&g, v)| v.iter().map(move |(s, id)| (*id, (s.clone(), g))))
        .collect();
    let p = build_partition_polytope(
        &sizes,
        &rest,
        &state,
        &types,
        &input.epsilon,
        input.opt_guess,
    );
    let VertexOutcome::Vertex(v) = find_vertex(&p)? else {
        return Err(GbpError::GuessRejected(
            "partition polytope is empty".into(),
        ));
    };
    let part = partition_items(&p, &v)?;
    for &id in &part.fractional {
        pool.push(id, ExtraCause::Fractional);
    }
    let eps2 = &input.epsilon * int(2);
    let mut out = SmallOutcome {
        core: vec![Vec::new(); input.n_core],
        ..Default::default()
    };
    let mut contents: Vec<Vec<ItemId>> = fill
        .iter()
        .map(|f| f.iter().map(|e| e.0).collect())
        .collect();
    let mut greedy_discards = 0;
    for (t, items) in part.per_type.iter().enumerate() {
        if items.is_empty() {
            continue;
        }
        let pt = &p.types[t];
        let real: &[usize] = if t < types.len() { &types[t] } else { &[] };
        let mut bins: Vec<GreedyBin> = real
            .iter()
            .map(|&b| GreedyBin {
                capacity: pt.free.clone(),
                blocked: state.bins[b].blocked(),
            })
            .collect();
        let fresh = if pt.extra { pt.bins } else { 0 };
        let slack = ceil_usize(&(&eps2 * int(pt.bins)));
        bins.extend((0..fresh + slack).map(|_| GreedyBin {
            capacity: pt.free.clone(),
            blocked: BTreeSet::new(),
        }));
        let triples: Vec<(ItemId, Rational, GroupId)> = items
            .iter()
            .map(|id| (*id, sizes[id].0.clone(), sizes[id].1))
            .collect();
        let g = greedy_pack(&triples, &bins)?;
        greedy_discards += g.discarded.len();
        for id in g.discarded {
            pool.push(id, ExtraCause::GreedyConflict);
        }
        for (k, packed) in g.bins.into_iter().enumerate() {
            if packed.is_empty() {
                continue;
            }
            if k < real.len() {
                contents[real[k]].extend(packed);
            } else if k < real.len() + fresh {
                out.extra.push((packed, ExtraCause::ExtraType));
            } else {
                out.extra.push((packed, ExtraCause::GreedySlack));
            }
        }
    }
    for (b, items) in contents.into_iter().enumerate() {
        if b < input.n_core {
            out.core[b] = items;
        } else if !items.is_empty() {
            out.extra.push((items, ExtraCause::Padding));
        }
    }
    out.pool = pool;
    out.stats = SmallStats {
        padding_bins: state.padding_bins,
        evictions,
        fractional_items: part.fractional.len(),
        fractional_groups: part.fractional_groups,
        greedy_discards,
        types: p.types.len(),
        ..Default::default()
    };
    Ok(out)
}

/// Runs the enumeration and completes the first guess that survives eviction,
/// the partition polytope and greedy packing. When none does within the
/// budget, all small items go to extra bins by balanced coloring.
pub fn pack_small_items(input: &SmallInput, budgets: &SmallBudgets) -> Result<SmallOutcome> {
    let mut found: Option<Result<SmallOutcome>> = None;
    let mut rejected = 0;
    let summary = recursive_enum(input, budgets, |state| match finish(input, state) {
        Err(GbpError::GuessRejected(_)) => {
            rejected += 1;
            ControlFlow::Continue(())
        }
        other => {
            found = Some(other);
            ControlFlow::Break(())
        }
    });
    let mut out = match found {
        Some(r) => r?,
        None => {
            let items: Vec<(ItemId, Rational, GroupId)> = input
                .by_group
                .iter()
                .flat_map(|(&g, v)| v.iter().map(move |(s, id)| (*id, s.clone(), g)))
                .collect();
            SmallOutcome {
                core: vec![Vec::new(); input.n_core],
                extra: balanced_coloring_bins(&items)
                    .into_iter()
                    .map(|b| (b, ExtraCause::SmallFallback))
                    .collect(),
                pool: DiscardPool::default(),
                stats: SmallStats {
                    fallback: true,
                    ..Default::default()
                },
            }
        }
    };
    out.stats.enum_nodes = summary.nodes;
    out.stats.enum_leaves = summary.leaves;
    out.stats.exhaustive = summary.exhaustive;
    out.stats.rejected_leaves = rejected;
    Ok(out)
}
