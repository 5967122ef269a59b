//! Branch-and-bound and brute-force optimal solvers for small instances.

use crate::error::{GbpError, Result};
use crate::heuristics::balanced_coloring;
use crate::model::rational::lcm_of_denominators;
use crate::model::{lower_bound, Instance, ItemId, Packing, Rational};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use std::time::{Duration, Instant};

#[derive(Clone, Debug)]
pub struct SolveLimits {
    pub max_items: usize,
    pub node_budget: u64,
    pub time_budget: Duration,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_items: 20,
            node_budget: 20_000_000,
            time_budget: Duration::from_secs(30),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExactResult {
    pub opt: usize,
    pub packing: Packing,
    pub proven_optimal: bool,
    pub nodes_explored: u64,
}

#[derive(Clone, Debug)]
pub enum Decision {
    Feasible(Packing),
    Infeasible,
    /// The budget ran out before the question was settled.
    Unknown,
}

impl Decision {
    pub fn packing(&self) -> Option<&Packing> {
        match self {
            Decision::Feasible(p) => Some(p),
            _ => None,
        }
    }
}

/// Sizes as integers over the common denominator of the instance.
struct Scaled {
    sizes: Vec<u128>,
    cap: u128,
}

fn scale(inst: &Instance) -> Result<Scaled> {
    let d = lcm_of_denominators(inst.items().iter().map(|it| &it.size));
    let limit = BigInt::from(u128::MAX) / BigInt::from(inst.n_items() as u64 + 2);
    if d > limit {
        return Err(GbpError::ScaleOverflow);
    }
    let sizes = inst
        .items()
        .iter()
        .map(|it| {
            (it.size.numer() * (&d / it.size.denom()))
                .to_u128()
                .ok_or(GbpError::ScaleOverflow)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scaled {
        sizes,
        cap: d.to_u128().ok_or(GbpError::ScaleOverflow)?,
    })
}

#[derive(Clone)]
struct Bin {
    load: u128,
    groups: Vec<u64>,
    items: Vec<ItemId>,
}

impl Bin {
    fn has(&self, g: usize) -> bool {
        self.groups[g / 64] >> (g % 64) & 1 == 1
    }
    fn toggle(&mut self, g: usize) {
        self.groups[g / 64] ^= 1 << (g % 64);
    }
}

struct Search<'a> {
    inst: &'a Instance,
    sizes: Vec<u128>,
    cap: u128,
    order: Vec<ItemId>,
    /// suffix[i] = total size of order[i..].
    suffix: Vec<u128>,
    words: usize,
    bins: Vec<Bin>,
    /// Solutions must use strictly fewer bins than this.
    best: usize,
    best_bins: Option<Vec<Vec<ItemId>>>,
    floor: usize,
    stop_at_first: bool,
    nodes: u64,
    node_budget: u64,
    deadline: Instant,
    exhausted: bool,
}

impl<'a> Search<'a> {
    fn new(
        inst: &'a Instance,
        limits: &SolveLimits,
        best: usize,
        stop_at_first: bool,
    ) -> Result<Search<'a>> {
        let Scaled { sizes, cap } = scale(inst)?;
        let mut order: Vec<ItemId> = (0..inst.n_items()).collect();
        order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        let mut suffix = vec![0u128; order.len() + 1];
        for i in (0..order.len()).rev() {
            suffix[i] = suffix[i + 1] + sizes[order[i]];
        }
        Ok(Search {
            inst,
            cap,
            order,
            suffix,
            words: inst.n_groups().div_ceil(64).max(1),
            sizes,
            bins: Vec::new(),
            best,
            best_bins: None,
            floor: lower_bound(inst),
            stop_at_first,
            nodes: 0,
            node_budget: limits.node_budget,
            deadline: Instant::now() + limits.time_budget,
            exhausted: false,
        })
    }

    fn done(&self) -> bool {
        self.exhausted
            || (self.best_bins.is_some() && (self.stop_at_first || self.best <= self.floor))
    }

    fn bound(&self, i: usize) -> usize {
        let open = self.bins.len();
        let free: u128 = self.bins.iter().map(|b| self.cap - b.load).sum();
        let rest = self.suffix[i];
        if rest <= free {
            open
        } else {
            open + (rest - free).div_ceil(self.cap) as usize
        }
    }

    fn dfs(&mut self, i: usize) {
        if self.done() {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.node_budget
            || (self.nodes % 4096 == 0 && Instant::now() > self.deadline)
        {
            self.exhausted = true;
            return;
        }
        if i == self.order.len() {
            self.best = self.bins.len();
            self.best_bins = Some(self.bins.iter().map(|b| b.items.clone()).collect());
            return;
        }
        if self.bound(i) >= self.best {
            return;
        }
        let id = self.order[i];
        let (s, g) = (self.sizes[id], self.inst.group(id));
        let mut tried: Vec<(u128, Vec<u64>)> = Vec::new();
        for b in 0..self.bins.len() {
            let bin = &self.bins[b];
            if bin.has(g) || bin.load + s > self.cap {
                continue;
            }
            let key = (bin.load, bin.groups.clone());
            if tried.contains(&key) {
                continue;
            }
            tried.push(key);
            let bin = &mut self.bins[b];
            bin.load += s;
            bin.toggle(g);
            bin.items.push(id);
            self.dfs(i + 1);
            let bin = &mut self.bins[b];
            bin.load -= s;
            bin.toggle(g);
            bin.items.pop();
            if self.done() {
                return;
            }
        }
        if self.bins.len() + 1 < self.best {
            let mut bin = Bin {
                load: s,
                groups: vec![0; self.words],
                items: vec![id],
            };
            bin.toggle(g);
            self.bins.push(bin);
            self.dfs(i + 1);
            self.bins.pop();
        }
    }
}

/// Minimum bin count by branch and bound, seeded with balanced coloring.
pub fn solve_exact(inst: &Instance, limits: &SolveLimits) -> Result<ExactResult> {
    if inst.n_items() > limits.max_items {
        return Err(GbpError::TooLarge(format!(
            "{} items, limit {}",
            inst.n_items(),
            limits.max_items
        )));
    }
    let incumbent = balanced_coloring(inst);
    let floor = lower_bound(inst);
    if incumbent.num_bins() <= floor {
        return Ok(ExactResult {
            opt: incumbent.num_bins(),
            packing: Packing::new(incumbent.bins, "exact"),
            proven_optimal: true,
            nodes_explored: 0,
        });
    }
    let mut search = Search::new(inst, limits, incumbent.num_bins(), false)?;
    search.dfs(0);
    let proven = !search.exhausted;
    let nodes = search.nodes;
    let bins = search.best_bins.unwrap_or(incumbent.bins);
    Ok(ExactResult {
        opt: bins.len(),
        packing: Packing::new(bins, "exact"),
        proven_optimal: proven,
        nodes_explored: nodes,
    })
}

/// Is there a packing into at most `m` bins?
pub fn feasible_in(inst: &Instance, m: usize, limits: &SolveLimits) -> Result<Decision> {
    if m < lower_bound(inst) {
        return Ok(Decision::Infeasible);
    }
    let coloring = balanced_coloring(inst);
    if coloring.num_bins() <= m {
        return Ok(Decision::Feasible(Packing::new(coloring.bins, "exact")));
    }
    if inst.n_items() > limits.max_items {
        return Err(GbpError::TooLarge(format!(
            "{} items, limit {}",
            inst.n_items(),
            limits.max_items
        )));
    }
    let mut search = Search::new(inst, limits, m + 1, true)?;
    search.dfs(0);
    Ok(match search.best_bins {
        Some(bins) => Decision::Feasible(Packing::new(bins, "exact")),
        None if search.exhausted => Decision::Unknown,
        None => Decision::Infeasible,
    })
}

/// Enumerates every set partition (restricted growth strings) for N ≤ 10.
pub fn solve_bruteforce(inst: &Instance) -> Result<ExactResult> {
    let n = inst.n_items();
    if n > 10 {
        return Err(GbpError::TooLarge(format!(
            "{n} items, brute force handles at most 10"
        )));
    }
    let mut assign = vec![0usize; n];
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut visited = 0u64;
    fn rec(
        inst: &Instance,
        i: usize,
        blocks: usize,
        assign: &mut Vec<usize>,
        best: &mut Option<(usize, Vec<usize>)>,
        visited: &mut u64,
    ) {
        if i == assign.len() {
            *visited += 1;
            if feasible_partition(inst, assign, blocks)
                && best.as_ref().map_or(true, |b| blocks < b.0)
            {
                *best = Some((blocks, assign.clone()));
            }
            return;
        }
        for b in 0..=blocks {
            assign[i] = b;
            rec(inst, i + 1, blocks.max(b + 1), assign, best, visited);
        }
    }
    rec(inst, 0, 0, &mut assign, &mut best, &mut visited);
    let (opt, assign) = best.expect("the all-singletons partition is always feasible");
    let mut bins = vec![Vec::new(); opt];
    for (id, &b) in assign.iter().enumerate() {
        bins[b].push(id);
    }
    Ok(ExactResult {
        opt,
        packing: Packing::new(bins, "bruteforce"),
        proven_optimal: true,
        nodes_explored: visited,
    })
}

fn feasible_partition(inst: &Instance, assign: &[usize], blocks: usize) -> bool {
    let mut loads = vec![Rational::zero(); blocks];
    let mut seen = vec![vec![false; inst.n_groups()]; blocks];
    for (id, &b) in assign.iter().enumerate() {
        let g = inst.group(id);
        if seen[b][g] {
            return false;
        }
        seen[b][g] = true;
        loads[b] += inst.size(id);
    }
    loads.iter().all(|l| *l <= Rational::one())
}
