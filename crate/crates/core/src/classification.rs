//! Guess range for OPT, choice of k, and the small/medium/large split of
//! items and groups.

use crate::error::{GbpError, Result};
use crate::heuristics::instance_coloring_bound;
use crate::model::rational::{ceil_usize, int, pow};
use crate::model::{lower_bound, total_size, GroupId, Instance, ItemId, Rational};
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassParams {
    pub epsilon: Rational,
    pub opt_guess: usize,
    pub k: usize,
}

impl ClassParams {
    /// ε^e.
    pub fn eps_pow(&self, e: usize) -> Rational {
        pow(&self.epsilon, e)
    }

    /// Items of size ≥ this are large.
    pub fn large_threshold(&self) -> Rational {
        self.eps_pow(self.k)
    }

    /// Items of size < this are small.
    pub fn small_threshold(&self) -> Rational {
        self.eps_pow(self.k + 1)
    }
}

/// ε must lie strictly between 0 and 1 for the classification helpers.
pub fn check_epsilon(epsilon: &Rational) -> Result<()> {
    if *epsilon <= Rational::zero() || *epsilon >= Rational::one() {
        return Err(GbpError::InvalidArgument(format!(
            "epsilon {epsilon} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// `(lower_bound, ⌈max{2S, S + v_max}⌉)`.
pub fn opt_guess_range(inst: &Instance) -> (usize, usize) {
    (lower_bound(inst), instance_coloring_bound(inst))
}

/// Total size of the items in the band [ε^{k+1}, ε^k).
pub fn band_mass(inst: &Instance, epsilon: &Rational, k: usize) -> Rational {
    let hi = pow(epsilon, k);
    let lo = &hi * epsilon;
    inst.items()
        .iter()
        .filter(|it| it.size >= lo && it.size < hi)
        .map(|it| &it.size)
        .sum()
}

/// Smallest k in [1, ⌈1/ε²⌉] whose band mass is at most ε²·opt_guess.
pub fn find_k(inst: &Instance, epsilon: &Rational, opt_guess: usize) -> Result<usize> {
    check_epsilon(epsilon)?;
    let top = ceil_usize(&(Rational::one() / (epsilon * epsilon)));
    let budget = epsilon * epsilon * int(opt_guess);
    // bands below the smallest positive size are empty, so the loop ends early
    for k in 1..=top {
        if band_mass(inst, epsilon, k) <= budget {
            return Ok(k);
        }
    }
    Err(GbpError::GuessRejected(format!(
        "no k in [1, {top}] has band mass within ε²·{opt_guess}"
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ItemClass {
    Small,
    Medium,
    Large,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ItemClasses {
    pub small: Vec<ItemId>,
    pub medium: Vec<ItemId>,
    pub large: Vec<ItemId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupClasses {
    pub large_groups: Vec<GroupId>,
    pub small_groups: Vec<GroupId>,
    /// Indexed by group id.
    pub is_large: Vec<bool>,
}

pub fn item_class(size: &Rational, params: &ClassParams) -> ItemClass {
    if *size < params.small_threshold() {
        ItemClass::Small
    } else if *size < params.large_threshold() {
        ItemClass::Medium
    } else {
        ItemClass::Large
    }
}

/// Splits items by size and groups by their count of large and medium items.
pub fn classify(inst: &Instance, params: &ClassParams) -> Result<(ItemClasses, GroupClasses)> {
    check_epsilon(&params.epsilon)?;
    if int(params.opt_guess) < total_size(inst) {
        return Err(GbpError::InvalidArgument(format!(
            "opt_guess {} is below the total size",
            params.opt_guess
        )));
    }
    let (small_t, large_t) = (params.small_threshold(), params.large_threshold());
    let mut items = ItemClasses::default();
    let mut heavy = vec![0usize; inst.n_groups()];
    for it in inst.items() {
        if it.size < small_t {
            items.small.push(it.id);
        } else {
            heavy[it.group] += 1;
            if it.size < large_t {
                items.medium.push(it.id);
            } else {
                items.large.push(it.id);
            }
        }
    }
    let threshold = params.eps_pow(params.k + 2) * int(params.opt_guess);
    let mut groups = GroupClasses {
        is_large: vec![false; inst.n_groups()],
        ..Default::default()
    };
    for (g, &c) in heavy.iter().enumerate() {
        if c > 0 && int(c) >= threshold {
            groups.large_groups.push(g);
            groups.is_large[g] = true;
        } else {
            groups.small_groups.push(g);
        }
    }
    if int(groups.large_groups.len()) * params.eps_pow(2 * params.k + 3) > Rational::one() {
        return Err(GbpError::Invariant(format!(
            "{} large groups exceed 1/ε^(2k+3)",
            groups.large_groups.len()
        )));
    }
    Ok((items, groups))
}

/// opt_guess > 3/ε^{k+2}: below this the scheme's counting arguments do not apply.
pub fn scheme_applicable(params: &ClassParams, _n_groups: usize) -> bool {
    int(params.opt_guess) > int(3) / params.eps_pow(params.k + 2)
}
