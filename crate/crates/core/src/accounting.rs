//! Why an item left the core bins, and how extra bins are attributed.

use crate::model::ItemId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtraCause {
    /// First size class of a large group.
    ShiftLarge,
    /// First and last class of the merged small-group large items.
    ShiftSwap,
    /// Medium items of small groups.
    MediumSmallGroup,
    /// Empty bins added to small types before enumeration.
    Padding,
    /// Largest class of a significant group inside a type.
    EnumShift,
    /// Guessed small items that conflict with a large item of their group.
    EnumConflict,
    Eviction,
    /// Bins of the fresh empty type.
    ExtraType,
    Fractional,
    /// The additional bins each type receives before greedy packing.
    GreedySlack,
    GreedyConflict,
    /// Small items packed by balanced coloring after every guess failed.
    SmallFallback,
    /// The whole output came from balanced coloring.
    Fallback,
}

impl ExtraCause {
    pub const ALL: [ExtraCause; 13] = [
        ExtraCause::ShiftLarge,
        ExtraCause::ShiftSwap,
        ExtraCause::MediumSmallGroup,
        ExtraCause::Padding,
        ExtraCause::EnumShift,
        ExtraCause::EnumConflict,
        ExtraCause::Eviction,
        ExtraCause::ExtraType,
        ExtraCause::Fractional,
        ExtraCause::GreedySlack,
        ExtraCause::GreedyConflict,
        ExtraCause::SmallFallback,
        ExtraCause::Fallback,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExtraCause::ShiftLarge => "shift_large",
            ExtraCause::ShiftSwap => "shift_swap",
            ExtraCause::MediumSmallGroup => "medium_small_group",
            ExtraCause::Padding => "padding",
            ExtraCause::EnumShift => "enum_shift",
            ExtraCause::EnumConflict => "enum_conflict",
            ExtraCause::Eviction => "eviction",
            ExtraCause::ExtraType => "extra_type",
            ExtraCause::Fractional => "fractional",
            ExtraCause::GreedySlack => "greedy_slack",
            ExtraCause::GreedyConflict => "greedy_conflict",
            ExtraCause::SmallFallback => "small_fallback",
            ExtraCause::Fallback => "fallback",
        }
    }
}

/// Discarded items tagged with the reason they were discarded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiscardPool {
    pub items: Vec<(ItemId, ExtraCause)>,
}

impl DiscardPool {
    pub fn push(&mut self, id: ItemId, cause: ExtraCause) {
        self.items.push((id, cause));
    }

    pub fn extend(&mut self, other: DiscardPool) {
        self.items.extend(other.items);
    }

    pub fn ids(&self) -> Vec<ItemId> {
        self.items.iter().map(|&(id, _)| id).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<ExtraCause, usize> {
        let mut m = BTreeMap::new();
        for &(_, c) in &self.items {
            *m.entry(c).or_insert(0) += 1;
        }
        m
    }
}
