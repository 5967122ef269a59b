//! Linear shifting: per large group, over the merged small-group large items,
//! and the map from a packing of rounded items back to original sizes.

use crate::accounting::{DiscardPool, ExtraCause};
use crate::classification::{ClassParams, GroupClasses, ItemClasses};
use crate::error::{GbpError, Result};
use crate::model::rational::{floor_usize, int, pow};
use crate::model::{GroupId, Instance, ItemId, Packing, Rational};
use num_traits::One;
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TableScope {
    Group(GroupId),
    /// Large items of all small groups, merged and rounded group-obliviously.
    Merged,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftClass {
    /// Sorted by non-increasing size, ties by id.
    pub members: Vec<ItemId>,
    /// Largest member size.
    pub rounded: Rational,
    pub discarded: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftTable {
    pub scope: TableScope,
    /// Class size actually used, max{Q, 1}.
    pub q: usize,
    pub classes: Vec<ShiftClass>,
}

impl ShiftTable {
    pub fn discarded(&self) -> Vec<ItemId> {
        self.classes
            .iter()
            .filter(|c| c.discarded)
            .flat_map(|c| c.members.iter().copied())
            .collect()
    }

    pub fn kept(&self) -> impl Iterator<Item = &ShiftClass> {
        self.classes.iter().filter(|c| !c.discarded)
    }
}

/// Sorts `ids` by non-increasing size, cuts them into classes of max{q,1}
/// items, rounds each class up to its largest size and discards class 1.
pub fn linear_shift(
    scope: TableScope,
    ids: &[ItemId],
    size: impl Fn(ItemId) -> Rational,
    q: usize,
) -> ShiftTable {
    let q = q.max(1);
    let mut sorted: Vec<(Rational, ItemId)> = ids.iter().map(|&id| (size(id), id)).collect();
    sorted.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let classes = sorted
        .chunks(q)
        .enumerate()
        .map(|(r, chunk)| ShiftClass {
            members: chunk.iter().map(|c| c.1).collect(),
            rounded: chunk[0].0.clone(),
            discarded: r == 0,
        })
        .collect();
    ShiftTable { scope, q, classes }
}

/// Items of an instance with some sizes rounded up and some discarded.
#[derive(Clone, Debug)]
pub struct RoundedInstance {
    pub base: Instance,
    pub tables: Vec<ShiftTable>,
    rounded: Vec<Option<Rational>>,
    scope_of: Vec<Option<TableScope>>,
    discarded: Vec<bool>,
    pub pool: DiscardPool,
}

impl RoundedInstance {
    pub fn identity(base: &Instance) -> RoundedInstance {
        let n = base.n_items();
        RoundedInstance {
            base: base.clone(),
            tables: Vec::new(),
            rounded: vec![None; n],
            scope_of: vec![None; n],
            discarded: vec![false; n],
            pool: DiscardPool::default(),
        }
    }

    pub fn add_table(&mut self, table: ShiftTable, cause: ExtraCause) {
        for class in &table.classes {
            for &id in &class.members {
                self.scope_of[id] = Some(table.scope);
                if class.discarded {
                    self.discard(id, cause);
                } else {
                    self.rounded[id] = Some(class.rounded.clone());
                }
            }
        }
        self.tables.push(table);
    }

    pub fn discard(&mut self, id: ItemId, cause: ExtraCause) {
        assert!(!self.discarded[id], "item {id} discarded twice");
        self.discarded[id] = true;
        self.pool.push(id, cause);
    }

    /// Combines the tables and discards of `other`, built over the same base.
    pub fn merge(mut self, other: RoundedInstance) -> RoundedInstance {
        for (id, cause) in other.pool.items {
            self.discard(id, cause);
        }
        for (id, r) in other.rounded.into_iter().enumerate() {
            if r.is_some() {
                self.rounded[id] = r;
            }
        }
        for (id, s) in other.scope_of.into_iter().enumerate() {
            if s.is_some() {
                self.scope_of[id] = s;
            }
        }
        self.tables.extend(other.tables);
        self
    }

    pub fn effective_size(&self, id: ItemId) -> Rational {
        self.rounded[id]
            .clone()
            .unwrap_or_else(|| self.base.size(id).clone())
    }

    pub fn is_rounded(&self, id: ItemId) -> bool {
        self.rounded[id].is_some()
    }

    pub fn scope(&self, id: ItemId) -> Option<TableScope> {
        self.scope_of[id]
    }

    pub fn is_discarded(&self, id: ItemId) -> bool {
        self.discarded[id]
    }

    /// Non-discarded items with rounded sizes, as a standalone instance.
    pub fn to_instance(&self) -> Result<(Instance, Vec<ItemId>)> {
        let ids: Vec<ItemId> = (0..self.base.n_items())
            .filter(|&i| !self.discarded[i])
            .collect();
        self.base.sub_instance(&ids, |id| self.effective_size(id))
    }

    /// Distinct rounded sizes over all kept classes.
    pub fn distinct_rounded_sizes(&self) -> usize {
        let set: BTreeSet<&Rational> = self
            .tables
            .iter()
            .flat_map(|t| t.kept().map(|c| &c.rounded))
            .collect();
        set.len()
    }
}

/// One table per large group over its large and medium items, with
/// Q = ⌊ε^{2k+4}·OPT⌋.
pub fn shift_large_groups(
    inst: &Instance,
    items: &ItemClasses,
    groups: &GroupClasses,
    params: &ClassParams,
) -> RoundedInstance {
    let q = floor_usize(&(params.eps_pow(2 * params.k + 4) * int(params.opt_guess)));
    let mut per_group: Vec<Vec<ItemId>> = vec![Vec::new(); inst.n_groups()];
    for &id in items.large.iter().chain(&items.medium) {
        if groups.is_large[inst.group(id)] {
            per_group[inst.group(id)].push(id);
        }
    }
    let mut r = RoundedInstance::identity(inst);
    for &g in &groups.large_groups {
        let table = linear_shift(
            TableScope::Group(g),
            &per_group[g],
            |id| inst.size(id).clone(),
            q,
        );
        r.add_table(table, ExtraCause::ShiftLarge);
    }
    r
}

/// One merged table over the large items of small groups with
/// Q = ⌊2ε·OPT⌋; the first and the last class are discarded.
pub fn shift_swap_small_groups(
    inst: &Instance,
    items: &ItemClasses,
    groups: &GroupClasses,
    params: &ClassParams,
) -> Result<RoundedInstance> {
    let ids: Vec<ItemId> = items
        .large
        .iter()
        .copied()
        .filter(|&id| !groups.is_large[inst.group(id)])
        .collect();
    let mut r = RoundedInstance::identity(inst);
    if ids.is_empty() {
        return Ok(r);
    }
    let q = floor_usize(&(int(2) * &params.epsilon * int(params.opt_guess)));
    if q == 0 {
        return Err(GbpError::GuessRejected(format!(
            "⌊2ε·{}⌋ = 0 with small-group large items",
            params.opt_guess
        )));
    }
    let mut table = linear_shift(TableScope::Merged, &ids, |id| inst.size(id).clone(), q);
    if let Some(last) = table.classes.last_mut() {
        last.discarded = true;
    }
    r.add_table(table, ExtraCause::ShiftSwap);
    Ok(r)
}

/// Both shifts plus the discard of medium items from small groups.
pub fn round_instance(
    inst: &Instance,
    items: &ItemClasses,
    groups: &GroupClasses,
    params: &ClassParams,
) -> Result<RoundedInstance> {
    let mut r = shift_large_groups(inst, items, groups, params);
    for &id in &items.medium {
        if !groups.is_large[inst.group(id)] {
            r.discard(id, ExtraCause::MediumSmallGroup);
        }
    }
    Ok(r.merge(shift_swap_small_groups(inst, items, groups, params)?))
}

/// 2/ε^{k+3} + 2/ε^{5k+9}, the cap on distinct rounded sizes.
pub fn distinct_size_bound(params: &ClassParams) -> Rational {
    let e = &params.epsilon;
    int(2) / pow(e, params.k + 3) + int(2) / pow(e, 5 * params.k + 9)
}

/// Maps a packing of the kept rounded items back to original items. Every
/// kept item must appear exactly once and no discarded item may appear.
pub fn unround(rounded_packing: &Packing, rinst: &RoundedInstance) -> Result<Packing> {
    let n = rinst.base.n_items();
    let mut seen = vec![false; n];
    for bin in &rounded_packing.bins {
        let mut load = Rational::default();
        for &id in bin {
            if id >= n || rinst.is_discarded(id) || seen[id] {
                return Err(GbpError::Invariant(format!(
                    "item {id} does not match a rounded slot"
                )));
            }
            seen[id] = true;
            load += rinst.effective_size(id);
        }
        if load > Rational::one() {
            return Err(GbpError::Invariant(
                "rounded packing overfills a bin".into(),
            ));
        }
    }
    if let Some(id) = (0..n).find(|&i| !seen[i] && !rinst.is_discarded(i)) {
        return Err(GbpError::Invariant(format!("kept item {id} has no slot")));
    }
    Ok(Packing {
        bins: rounded_packing.bins.clone(),
        core_bins: rounded_packing.core_bins,
        source: rounded_packing.source.clone(),
    })
}
