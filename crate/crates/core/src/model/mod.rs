//! Instances, packings, feasibility checking and lower bounds.

pub mod io;
pub mod rational;

use crate::error::{GbpError, Result};
use num_traits::{One, Zero};
pub use rational::Rational;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type ItemId = usize;
pub type GroupId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Item {
    pub id: ItemId,
    pub size: Rational,
    pub group: GroupId,
    /// Size-0 filler added by [`pad_dummy_items`].
    pub dummy: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A validated instance. Item `i` has id `i`; groups are `0..n_groups`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    items: Vec<Item>,
    n_groups: usize,
    pub metadata: Metadata,
    /// External id of each dense id, used for JSON round trips.
    external_ids: Vec<u64>,
}

impl Instance {
    /// Builds an instance from `(size, group)` pairs; ids follow the input order.
    pub fn new(n_groups: usize, items: Vec<(Rational, GroupId)>) -> Result<Instance> {
        let raw = items
            .into_iter()
            .enumerate()
            .map(|(i, (size, group))| RawItem {
                id: i as u64,
                size,
                group,
                dummy: false,
            })
            .collect();
        Ok(validate_instance(RawInstance {
            n_groups,
            items: raw,
            metadata: Metadata::default(),
        })?
        .0)
    }

    pub fn empty() -> Instance {
        Instance {
            items: Vec::new(),
            n_groups: 0,
            metadata: Metadata::default(),
            external_ids: Vec::new(),
        }
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, id: ItemId) -> &Item {
        &self.items[id]
    }

    pub fn size(&self, id: ItemId) -> &Rational {
        &self.items[id].size
    }

    pub fn group(&self, id: ItemId) -> GroupId {
        self.items[id].group
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn external_id(&self, id: ItemId) -> u64 {
        self.external_ids[id]
    }

    /// Item ids per group, each list in id order.
    pub fn groups(&self) -> Vec<Vec<ItemId>> {
        let mut g = vec![Vec::new(); self.n_groups];
        for it in &self.items {
            g[it.group].push(it.id);
        }
        g
    }

    /// Restriction to `ids` with sizes given by `size_of`. Groups are compacted
    /// in order of first appearance; returns the map from new id to old id.
    pub fn sub_instance(
        &self,
        ids: &[ItemId],
        mut size_of: impl FnMut(ItemId) -> Rational,
    ) -> Result<(Instance, Vec<ItemId>)> {
        let mut remap = HashMap::new();
        let mut items = Vec::with_capacity(ids.len());
        for &id in ids {
            let next = remap.len();
            let g = *remap.entry(self.group(id)).or_insert(next);
            items.push((size_of(id), g));
        }
        let mut sub = Instance::new(remap.len(), items)?;
        sub.metadata = self.metadata.clone();
        Ok((sub, ids.to_vec()))
    }
}

/// Unvalidated instance as read from input.
#[derive(Clone, Debug)]
pub struct RawInstance {
    pub n_groups: usize,
    pub items: Vec<RawItem>,
    pub metadata: Metadata,
}

#[derive(Clone, Debug)]
pub struct RawItem {
    pub id: u64,
    pub size: Rational,
    pub group: usize,
    pub dummy: bool,
}

/// Checks bounds and group coverage, reduces sizes and densifies ids (by rank
/// of the external id). Returns the instance plus non-fatal warnings.
pub fn validate_instance(raw: RawInstance) -> Result<(Instance, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut order: Vec<usize> = (0..raw.items.len()).collect();
    order.sort_by_key(|&i| raw.items[i].id);
    for w in order.windows(2) {
        if raw.items[w[0]].id == raw.items[w[1]].id {
            return Err(GbpError::InvalidInstance(format!(
                "duplicate id {}",
                raw.items[w[0]].id
            )));
        }
    }
    let mut seen = vec![false; raw.n_groups];
    let mut items = Vec::with_capacity(raw.items.len());
    let mut external_ids = Vec::with_capacity(raw.items.len());
    for (dense, &i) in order.iter().enumerate() {
        let it = &raw.items[i];
        if it.size < Rational::zero() || it.size > Rational::one() {
            return Err(GbpError::InvalidInstance(format!(
                "size outside [0,1] for item {}: {}",
                it.id,
                rational::format_rational(&it.size)
            )));
        }
        if it.group >= raw.n_groups {
            return Err(GbpError::InvalidInstance(format!(
                "group index gap: item {} has group {} but n_groups is {}",
                it.id, it.group, raw.n_groups
            )));
        }
        if it.size.is_zero() && !it.dummy {
            warnings.push(format!("item {} has size 0", it.id));
        }
        seen[it.group] = true;
        items.push(Item {
            id: dense,
            size: it.size.clone(),
            group: it.group,
            dummy: it.dummy,
        });
        external_ids.push(it.id);
    }
    if let Some(g) = seen.iter().position(|s| !s) {
        return Err(GbpError::InvalidInstance(format!(
            "group index gap: group {g} has no items"
        )));
    }
    if external_ids.iter().enumerate().any(|(i, &e)| e != i as u64) {
        warnings.push("item ids were not dense; renumbered by rank".to_string());
    }
    Ok((
        Instance {
            items,
            n_groups: raw.n_groups,
            metadata: raw.metadata,
            external_ids,
        },
        warnings,
    ))
}

pub fn total_size(inst: &Instance) -> Rational {
    inst.items.iter().map(|it| &it.size).sum()
}

/// v_max, the largest group cardinality.
pub fn max_group_cardinality(inst: &Instance) -> usize {
    let mut counts = vec![0usize; inst.n_groups];
    for it in &inst.items {
        counts[it.group] += 1;
    }
    counts.into_iter().max().unwrap_or(0)
}

/// max(⌈S(I)⌉, v_max).
pub fn lower_bound(inst: &Instance) -> usize {
    rational::ceil_usize(&total_size(inst)).max(max_group_cardinality(inst))
}

/// Adds size-0 dummies so that every group has exactly `m` items.
pub fn pad_dummy_items(inst: &Instance, m: usize) -> Result<Instance> {
    let vmax = max_group_cardinality(inst);
    if m < vmax {
        return Err(GbpError::InvalidArgument(format!(
            "m = {m} is below v_max = {vmax}"
        )));
    }
    let mut out = inst.clone();
    let mut counts = vec![0usize; inst.n_groups];
    for it in &inst.items {
        counts[it.group] += 1;
    }
    let mut next_ext = inst.external_ids.iter().max().map_or(0, |e| e + 1);
    for (g, &c) in counts.iter().enumerate() {
        for _ in c..m {
            let id = out.items.len();
            out.items.push(Item {
                id,
                size: Rational::zero(),
                group: g,
                dummy: true,
            });
            out.external_ids.push(next_ext);
            next_ext += 1;
        }
    }
    Ok(out)
}

/// Removes dummy items from a packing of a padded instance.
pub fn strip_dummies(padded: &Instance, p: &Packing) -> Packing {
    let bins: Vec<Vec<ItemId>> = p
        .bins
        .iter()
        .map(|b| {
            b.iter()
                .copied()
                .filter(|&i| !padded.item(i).dummy)
                .collect()
        })
        .collect();
    let core = bins[..p.core_bins.min(bins.len())]
        .iter()
        .filter(|b| !b.is_empty())
        .count();
    let mut kept: Vec<Vec<ItemId>> = Vec::new();
    let mut extra = Vec::new();
    for (i, b) in bins.into_iter().enumerate() {
        if b.is_empty() {
            continue;
        }
        if i < p.core_bins {
            kept.push(b);
        } else {
            extra.push(b);
        }
    }
    kept.extend(extra);
    Packing {
        bins: kept,
        core_bins: core,
        source: p.source.clone(),
    }
}

/// Bins of item ids. Bins at index `core_bins` and beyond are extra bins
/// holding discarded items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packing {
    pub bins: Vec<Vec<ItemId>>,
    pub core_bins: usize,
    pub source: String,
}

impl Packing {
    /// A packing with no extra-bin region.
    pub fn new(bins: Vec<Vec<ItemId>>, source: impl Into<String>) -> Packing {
        let core_bins = bins.len();
        Packing {
            bins,
            core_bins,
            source: source.into(),
        }
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn extra_bins(&self) -> usize {
        self.bins.len().saturating_sub(self.core_bins)
    }

    /// Items placed in extra bins.
    pub fn discarded(&self) -> Vec<ItemId> {
        self.bins
            .iter()
            .skip(self.core_bins)
            .flatten()
            .copied()
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Capacity,
    Conflict,
    Duplicate,
    Missing,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub bin: Option<usize>,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Reports every overflow, same-group pair, duplicate and missing item.
pub fn check_packing(inst: &Instance, p: &Packing) -> FeasibilityReport {
    let n = inst.n_items();
    let mut violations = Vec::new();
    let mut placed: Vec<Option<usize>> = vec![None; n];
    for (b, bin) in p.bins.iter().enumerate() {
        let mut load = Rational::zero();
        let mut groups: HashMap<GroupId, ItemId> = HashMap::new();
        for &id in bin {
            if id >= n {
                violations.push(Violation {
                    bin: Some(b),
                    kind: ViolationKind::Missing,
                    detail: format!("item {id} is not in the instance"),
                });
                continue;
            }
            if let Some(prev) = placed[id] {
                violations.push(Violation {
                    bin: Some(b),
                    kind: ViolationKind::Duplicate,
                    detail: format!("item {id} already placed in bin {prev}"),
                });
                continue;
            }
            placed[id] = Some(b);
            load += inst.size(id);
            if let Some(other) = groups.insert(inst.group(id), id) {
                violations.push(Violation {
                    bin: Some(b),
                    kind: ViolationKind::Conflict,
                    detail: format!("items {other} and {id} share group {}", inst.group(id)),
                });
            }
        }
        if load > Rational::one() {
            violations.push(Violation {
                bin: Some(b),
                kind: ViolationKind::Capacity,
                detail: format!("load {} exceeds 1", rational::format_rational(&load)),
            });
        }
    }
    for (id, slot) in placed.iter().enumerate() {
        if slot.is_none() {
            violations.push(Violation {
                bin: None,
                kind: ViolationKind::Missing,
                detail: format!("item {id} is unpacked"),
            });
        }
    }
    FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    }
}
