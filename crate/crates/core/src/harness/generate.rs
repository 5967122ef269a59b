//! Seeded instance generators and the adversarial family on which First-Fit
//! needs almost twice the optimum.

use crate::error::{GbpError, Result};
use crate::model::rational::{int, rat, serde_rational};
use crate::model::{check_packing, Instance, ItemId, Metadata, Packing, Rational};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `n` items with sizes uniform in [min_size, max_size], groups uniform.
    Uniform {
        n: usize,
        groups: usize,
        #[serde(with = "serde_rational")]
        min_size: Rational,
        #[serde(with = "serde_rational")]
        max_size: Rational,
    },
    /// As `Uniform`, but group 0 receives half of the items.
    CliqueHeavy {
        n: usize,
        groups: usize,
        #[serde(with = "serde_rational")]
        min_size: Rational,
        #[serde(with = "serde_rational")]
        max_size: Rational,
    },
    Adversarial {
        #[serde(with = "serde_rational")]
        epsilon: Rational,
        n_hat: usize,
    },
    /// `n` groups of `m` items of one size.
    EqualGroups {
        n: usize,
        m: usize,
        #[serde(with = "serde_rational")]
        size: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl GenSpec {
    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Uniform { .. } => "uniform",
            Family::CliqueHeavy { .. } => "clique_heavy",
            Family::Adversarial { .. } => "adversarial",
            Family::EqualGroups { .. } => "equal_groups",
        }
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}-{}", self.family_name(), self.seed))
    }
}

fn check_size(s: &Rational, what: &str) -> Result<()> {
    if *s < Rational::zero() || *s > Rational::one() {
        return Err(GbpError::InvalidArgument(format!(
            "{what} must lie in [0, 1]"
        )));
    }
    Ok(())
}

/// Sizes drawn as multiples of 1/10^d for the smallest d ≥ 2 that puts a
/// multiple inside the range.
fn size_sampler(min: &Rational, max: &Rational) -> Result<(i64, i64, i64)> {
    check_size(min, "min_size")?;
    check_size(max, "max_size")?;
    if min > max || max.is_zero() {
        return Err(GbpError::InvalidArgument(
            "size range must satisfy 0 ≤ min ≤ max, max > 0".into(),
        ));
    }
    for d in 2..=9u32 {
        let den = 10i64.pow(d);
        let lo = (min * int(den as usize)).ceil().to_integer();
        let hi = (max * int(den as usize)).floor().to_integer();
        let lo = lo.max(1.into());
        if lo <= hi {
            let conv = |v: num_bigint::BigInt| -> i64 { v.try_into().expect("fits") };
            return Ok((conv(lo), conv(hi), den));
        }
    }
    Err(GbpError::InvalidArgument(
        "size range contains no decimal with at most 9 digits".into(),
    ))
}

fn random_instance(
    n: usize,
    groups: usize,
    min: &Rational,
    max: &Rational,
    heavy: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Instance> {
    if n == 0 {
        return Ok(Instance::empty());
    }
    if groups == 0 {
        return Err(GbpError::InvalidArgument("groups must be positive".into()));
    }
    let (lo, hi, den) = size_sampler(min, max)?;
    let groups = groups.min(n);
    let heavy_count = if heavy && groups > 1 {
        n.div_ceil(2)
    } else {
        0
    };
    let mut items = Vec::with_capacity(n);
    for i in 0..n {
        let g = if i < groups {
            i
        } else if i < groups + heavy_count.saturating_sub(1) {
            0
        } else if heavy && groups > 1 {
            rng.gen_range(1..groups)
        } else {
            rng.gen_range(0..groups)
        };
        items.push((rat(rng.gen_range(lo..=hi), den), g));
    }
    Instance::new(groups, items)
}

/// Items of the adversarial family in this order: 4N̂ singletons of size
/// 1/5, then N̂(1/ε − 1) singletons of size ε/5, then one group of N̂ items
/// of size ε/5.
pub fn adversarial_instance(epsilon: &Rational, n_hat: usize) -> Result<Instance> {
    let (inv, n2) = adversarial_counts(epsilon, n_hat)?;
    debug_assert_eq!(n2, n_hat * (inv - 1));
    let n1 = 4 * n_hat;
    let small = epsilon / int(5);
    let mut items = Vec::with_capacity(n1 + n2 + n_hat);
    for g in 0..n1 {
        items.push((rat(1, 5), g));
    }
    for g in n1..n1 + n2 {
        items.push((small.clone(), g));
    }
    let last = n1 + n2;
    items.extend(std::iter::repeat((small, last)).take(n_hat));
    Instance::new(last + usize::from(n_hat > 0), items)
}

/// (1/ε, n₂); 1/ε and ε·N̂ must be integers.
fn adversarial_counts(epsilon: &Rational, n_hat: usize) -> Result<(usize, usize)> {
    if *epsilon <= Rational::zero() || *epsilon >= Rational::one() {
        return Err(GbpError::InvalidArgument(
            "epsilon must lie in (0, 1)".into(),
        ));
    }
    let inv = Rational::one() / epsilon;
    if !inv.is_integer() || !(epsilon * int(n_hat)).is_integer() {
        return Err(GbpError::InvalidArgument(
            "1/ε and ε·N̂ must be integers".into(),
        ));
    }
    let inv: usize = inv
        .to_integer()
        .try_into()
        .map_err(|_| GbpError::InvalidArgument("1/ε too large".into()))?;
    Ok((inv, n_hat * (inv - 1)))
}

pub fn generate(spec: &GenSpec) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut inst = match &spec.family {
        Family::Uniform {
            n,
            groups,
            min_size,
            max_size,
        } => random_instance(*n, *groups, min_size, max_size, false, &mut rng)?,
        Family::CliqueHeavy {
            n,
            groups,
            min_size,
            max_size,
        } => random_instance(*n, *groups, min_size, max_size, true, &mut rng)?,
        Family::Adversarial { epsilon, n_hat } => adversarial_instance(epsilon, *n_hat)?,
        Family::EqualGroups { n, m, size } => {
            check_size(size, "size")?;
            let items = (0..*n)
                .flat_map(|g| (0..*m).map(move |_| g))
                .map(|g| (size.clone(), g))
                .collect();
            if *m == 0 {
                Instance::empty()
            } else {
                Instance::new(*n, items)?
            }
        }
    };
    inst.metadata = Metadata {
        name: Some(spec.label()),
        seed: Some(spec.seed),
    };
    Ok(inst)
}

/// The two packings of the adversarial family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapDemo {
    pub instance: Instance,
    /// N̂ full bins: four items of size 1/5 and 1/ε items of size ε/5 each.
    pub optimal: Packing,
    /// (2 − ε)N̂ bins: the large items packed optimally, the singletons of
    /// size ε/5 filling (1 − ε)N̂ of those bins, and the big group spilling
    /// into (1 − ε)N̂ new bins.
    pub greedy: Packing,
}

pub fn demonstrate_gap(epsilon: &Rational, n_hat: usize) -> Result<GapDemo> {
    let instance = adversarial_instance(epsilon, n_hat)?;
    let (inv, n2) = adversarial_counts(epsilon, n_hat)?;
    let n1 = 4 * n_hat;
    let big: Vec<ItemId> = (n1 + n2..n1 + n2 + n_hat).collect();
    let large = |b: usize| 4 * b..4 * b + 4;

    let mut optimal = Vec::with_capacity(n_hat);
    for b in 0..n_hat {
        let mut bin: Vec<ItemId> = large(b).collect();
        bin.extend(n1 + b * (inv - 1)..n1 + (b + 1) * (inv - 1));
        bin.push(big[b]);
        optimal.push(bin);
    }

    let filled = n2 / inv;
    let mut greedy: Vec<Vec<ItemId>> = Vec::with_capacity(2 * n_hat);
    let mut next_big = big.iter();
    for b in 0..n_hat {
        let mut bin: Vec<ItemId> = large(b).collect();
        if b < filled {
            bin.extend(n1 + b * inv..n1 + (b + 1) * inv);
        } else {
            bin.extend(next_big.next());
        }
        greedy.push(bin);
    }
    greedy.extend(next_big.map(|&id| vec![id]));

    let optimal = Packing::new(optimal, "adversarial_optimal");
    let greedy = Packing::new(greedy, "adversarial_greedy");
    for p in [&optimal, &greedy] {
        let r = check_packing(&instance, p);
        if !r.feasible {
            return Err(GbpError::Invariant(format!(
                "{} is infeasible: {:?}",
                p.source, r.violations
            )));
        }
    }
    Ok(GapDemo {
        instance,
        optimal,
        greedy,
    })
}

/// Item order that makes First-Fit reproduce the greedy side of
/// [`demonstrate_gap`]: its bins listed one after another.
pub fn adversarial_order(epsilon: &Rational, n_hat: usize) -> Result<Vec<ItemId>> {
    Ok(demonstrate_gap(epsilon, n_hat)?.greedy.bins.concat())
}

/// Whether `inst` has the shape of the adversarial family for some (ε, N̂),
/// returning them.
pub fn detect_adversarial(inst: &Instance) -> Option<(Rational, usize)> {
    let groups = inst.groups();
    let last = groups.last()?;
    let n_hat = last.len();
    if n_hat == 0 || inst.n_items() % n_hat != 0 {
        return None;
    }
    let small = inst.size(last[0]).clone();
    let epsilon = &small * int(5);
    let candidate = adversarial_instance(&epsilon, n_hat).ok()?;
    let same = candidate.n_items() == inst.n_items()
        && (0..inst.n_items())
            .all(|i| candidate.size(i) == inst.size(i) && candidate.group(i) == inst.group(i));
    same.then_some((epsilon, n_hat))
}
