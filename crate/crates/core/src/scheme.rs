//! The guess loop over OPT and the sequencing of rounding, slot placement,
//! swapping, small-item packing and repacking of discarded items.

use crate::accounting::{DiscardPool, ExtraCause};
use crate::classification::{classify, find_k, opt_guess_range, scheme_applicable, ClassParams};
use crate::error::{GbpError, Result};
use crate::heuristics::{balanced_coloring, balanced_coloring_bins};
use crate::model::rational::{format_rational, rat};
use crate::model::{check_packing, lower_bound, GroupId, Instance, ItemId, Packing, Rational};
use crate::patterns::{
    build_slot_alphabet, enumerate_patterns, for_each_assignment, heuristic_placement, pattern_cap,
    place_by_patterns, swapping, SlotPacking, SwapStats,
};
use crate::shifting::round_instance;
use crate::small_items::{pack_small_items, SmallBudgets, SmallInput};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::time::Instant;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    /// Patterns enumerated per guess.
    pub pattern_budget: usize,
    /// Search nodes of the assignment enumeration per guess.
    pub assignment_budget: usize,
    /// Search nodes of the small-item enumeration per guess.
    pub enum_budget: usize,
    pub alpha_override: Option<usize>,
    /// Reject guesses with opt_guess ≤ 3/ε^{k+2}. Turning this off runs the
    /// pipeline on instances far below the regime it was designed for.
    pub enforce_applicability: bool,
    /// Fill `SchemeReport::phase_ms`. Off by default so reports are reproducible.
    pub record_timings: bool,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            pattern_budget: 100_000,
            assignment_budget: 100_000,
            enum_budget: 10_000,
            alpha_override: None,
            enforce_applicability: true,
            record_timings: false,
        }
    }
}

impl Budgets {
    /// Budgets large enough that tiny instances are searched exhaustively.
    pub fn exhaustive() -> Budgets {
        Budgets {
            pattern_budget: 10_000_000,
            assignment_budget: 10_000_000,
            enum_budget: 1_000_000,
            enforce_applicability: false,
            ..Budgets::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessLog {
    pub opt_guess: usize,
    pub outcome: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseFlags {
    pub patterns_exhaustive: bool,
    pub assignments_exhaustive: bool,
    pub enumeration_exhaustive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeReport {
    pub epsilon: String,
    /// Guess whose pipeline output was kept; `None` for the fallback.
    pub opt_guess: Option<usize>,
    pub k: Option<usize>,
    pub core_bins: usize,
    pub extra_bins: usize,
    pub total_bins: usize,
    /// Every cause, zero counts included; sums to `extra_bins`.
    pub extra_by_cause: BTreeMap<String, usize>,
    pub fallback: bool,
    pub fallback_reason: Option<String>,
    pub flags: PhaseFlags,
    pub counters: BTreeMap<String, usize>,
    pub lower_bound: usize,
    pub ratio_vs_lower_bound: f64,
    pub guesses: Vec<GuessLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_ms: Option<BTreeMap<String, f64>>,
}

impl SchemeReport {
    fn new(inst: &Instance, epsilon: &Rational) -> SchemeReport {
        SchemeReport {
            epsilon: format_rational(epsilon),
            opt_guess: None,
            k: None,
            core_bins: 0,
            extra_bins: 0,
            total_bins: 0,
            extra_by_cause: ExtraCause::ALL
                .iter()
                .map(|c| (c.name().to_string(), 0))
                .collect(),
            fallback: false,
            fallback_reason: None,
            flags: PhaseFlags::default(),
            counters: BTreeMap::new(),
            lower_bound: lower_bound(inst),
            ratio_vs_lower_bound: 0.0,
            guesses: Vec::new(),
            phase_ms: None,
        }
    }

    /// Sum of the per-cause counters.
    pub fn attributed_extra(&self) -> usize {
        self.extra_by_cause.values().sum()
    }

    fn finish_totals(&mut self, p: &Packing) {
        self.core_bins = p.core_bins;
        self.extra_bins = p.extra_bins();
        self.total_bins = p.num_bins();
        self.ratio_vs_lower_bound = if self.lower_bound == 0 {
            1.0
        } else {
            self.total_bins as f64 / self.lower_bound as f64
        };
    }
}

/// Balanced coloring on the pool. Each bin is charged to the cause with the
/// most items in it, ties to the earliest cause.
pub fn pack_discards(inst: &Instance, pool: &DiscardPool) -> Vec<(Vec<ItemId>, ExtraCause)> {
    let mut entries = pool.items.clone();
    entries.sort();
    let cause: BTreeMap<ItemId, ExtraCause> = entries.iter().copied().collect();
    let items: Vec<(ItemId, Rational, GroupId)> = entries
        .iter()
        .map(|&(id, _)| (id, inst.size(id).clone(), inst.group(id)))
        .collect();
    balanced_coloring_bins(&items)
        .into_iter()
        .filter(|b| !b.is_empty())
        .map(|bin| {
            let mut votes: BTreeMap<ExtraCause, usize> = BTreeMap::new();
            for id in &bin {
                *votes.entry(cause[id]).or_insert(0) += 1;
            }
            let top = *votes.values().max().expect("non-empty bin");
            let c = *votes.iter().find(|(_, &v)| v == top).expect("max exists").0;
            (bin, c)
        })
        .collect()
}

struct Pipeline {
    packing: Packing,
    k: usize,
    extra: BTreeMap<ExtraCause, usize>,
    flags: PhaseFlags,
    counters: BTreeMap<String, usize>,
}

struct Clock {
    on: bool,
    last: Instant,
    ms: BTreeMap<String, f64>,
}

impl Clock {
    fn lap(&mut self, phase: &str) {
        if self.on {
            let now = Instant::now();
            *self.ms.entry(phase.to_string()).or_insert(0.0) +=
                (now - self.last).as_secs_f64() * 1000.0;
            self.last = now;
        }
    }
}

fn run_guess(
    inst: &Instance,
    epsilon: &Rational,
    g: usize,
    budgets: &Budgets,
    clock: &mut Clock,
) -> Result<Pipeline> {
    let k = find_k(inst, epsilon, g)?;
    let params = ClassParams {
        epsilon: epsilon.clone(),
        opt_guess: g,
        k,
    };
    if budgets.enforce_applicability && !scheme_applicable(&params, inst.n_groups()) {
        return Err(GbpError::GuessRejected(format!(
            "guess {g} is at most 3/ε^{}",
            k + 2
        )));
    }
    let (items, groups) = classify(inst, &params)?;
    let rinst = round_instance(inst, &items, &groups, &params)?;
    clock.lap("rounding");

    let alphabet = build_slot_alphabet(&rinst);
    let set = enumerate_patterns(
        &alphabet,
        pattern_cap(epsilon, k),
        budgets.pattern_budget,
        true,
    );
    let mut chosen: Option<(SlotPacking, SwapStats)> = None;
    let mut failure: Option<GbpError> = None;
    let mut swap_rejections = 0;
    let stats = for_each_assignment(&set, &alphabet.supply, g, budgets.assignment_budget, |a| {
        match place_by_patterns(a, &set, &alphabet).and_then(|p| swapping(&p, &alphabet, &rinst)) {
            Ok(r) => {
                chosen = Some(r);
                ControlFlow::Break(())
            }
            Err(GbpError::GuessRejected(_)) => {
                swap_rejections += 1;
                ControlFlow::Continue(())
            }
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let mut counters = BTreeMap::new();
    counters.insert("patterns".to_string(), set.patterns.len());
    counters.insert("assignment_nodes".to_string(), stats.nodes);
    counters.insert("swap_rejections".to_string(), swap_rejections);
    let mut used_heuristic = 0;
    let (placement, swap) = match chosen {
        Some(c) => c,
        None => match heuristic_placement(&alphabet, &rinst, g) {
            Some(p) => {
                used_heuristic = 1;
                (p, SwapStats::default())
            }
            None => {
                return Err(GbpError::GuessRejected(format!(
                    "no placement of the rounded items into {g} bins"
                )))
            }
        },
    };
    counters.insert("heuristic_placement".to_string(), used_heuristic);
    counters.insert("swaps".to_string(), swap.swaps);
    counters.insert("swap_candidates_examined".to_string(), swap.examined);
    clock.lap("placement");

    let input = SmallInput::new(inst, &rinst, &placement, &items.small, epsilon, g);
    let small_budgets = SmallBudgets {
        enum_budget: budgets.enum_budget,
        alpha_override: budgets.alpha_override,
    };
    let small = pack_small_items(&input, &small_budgets)?;
    clock.lap("small_items");
    counters.insert("enum_nodes".to_string(), small.stats.enum_nodes);
    counters.insert("enum_leaves".to_string(), small.stats.enum_leaves);
    counters.insert(
        "enum_rejected_leaves".to_string(),
        small.stats.rejected_leaves,
    );
    counters.insert("small_fallback".to_string(), small.stats.fallback as usize);
    counters.insert("evictions".to_string(), small.stats.evictions);
    counters.insert("fractional_items".to_string(), small.stats.fractional_items);
    counters.insert("padding_bins".to_string(), small.stats.padding_bins);

    let mut pool = rinst.pool.clone();
    pool.extend(small.pool.clone());
    counters.insert("discarded_items".to_string(), pool.len());
    let mut bins: Vec<Vec<ItemId>> = Vec::new();
    for (b, mut bin) in placement.bins.into_iter().enumerate() {
        bin.extend(&small.core[b]);
        if !bin.is_empty() {
            bin.sort_unstable();
            bins.push(bin);
        }
    }
    let core_bins = bins.len();
    let mut extra: BTreeMap<ExtraCause, usize> = BTreeMap::new();
    for (bin, cause) in small.extra.into_iter().chain(pack_discards(inst, &pool)) {
        *extra.entry(cause).or_insert(0) += 1;
        bins.push(bin);
    }
    clock.lap("discards");
    let packing = Packing {
        bins,
        core_bins,
        source: "aptas".into(),
    };
    let report = check_packing(inst, &packing);
    if !report.feasible {
        return Err(GbpError::Invariant(format!(
            "pipeline packing is infeasible: {:?}",
            report.violations
        )));
    }
    Ok(Pipeline {
        packing,
        k,
        extra,
        flags: PhaseFlags {
            patterns_exhaustive: set.exhaustive,
            assignments_exhaustive: stats.exhaustive,
            enumeration_exhaustive: small.stats.exhaustive,
        },
        counters,
    })
}

/// Tries guesses in ascending order from the lower bound and keeps the first
/// one that every phase accepts, unless balanced coloring uses fewer bins.
pub fn opt_guess_loop(
    inst: &Instance,
    epsilon: &Rational,
    budgets: &Budgets,
) -> Result<(Packing, SchemeReport)> {
    let mut report = SchemeReport::new(inst, epsilon);
    let mut clock = Clock {
        on: budgets.record_timings,
        last: Instant::now(),
        ms: BTreeMap::new(),
    };
    if inst.is_empty() {
        let p = Packing {
            bins: Vec::new(),
            core_bins: 0,
            source: "aptas".into(),
        };
        report.finish_totals(&p);
        return Ok((p, report));
    }
    let fallback = balanced_coloring(inst);
    clock.lap("fallback");
    let (lo, hi) = opt_guess_range(inst);
    let mut reason = format!("every guess in [{lo}, {hi}] was rejected");
    for g in lo..=hi {
        match run_guess(inst, epsilon, g, budgets, &mut clock) {
            Ok(run) => {
                report.guesses.push(GuessLog {
                    opt_guess: g,
                    outcome: "accepted".into(),
                });
                if run.packing.num_bins() <= fallback.num_bins() {
                    report.opt_guess = Some(g);
                    report.k = Some(run.k);
                    for (c, n) in &run.extra {
                        *report
                            .extra_by_cause
                            .get_mut(c.name())
                            .expect("cause listed") += n;
                    }
                    report.flags = run.flags;
                    report.counters = run.counters;
                    report.finish_totals(&run.packing);
                    if budgets.record_timings {
                        report.phase_ms = Some(clock.ms);
                    }
                    return Ok((run.packing, report));
                }
                report.counters = run.counters;
                report.flags = run.flags;
                reason = format!(
                    "pipeline at guess {g} used {} bins, fallback {}",
                    run.packing.num_bins(),
                    fallback.num_bins()
                );
                break;
            }
            Err(GbpError::GuessRejected(m)) => report.guesses.push(GuessLog {
                opt_guess: g,
                outcome: m,
            }),
            Err(e) => return Err(e),
        }
    }
    let p = Packing {
        bins: fallback.bins,
        core_bins: 0,
        source: "aptas".into(),
    };
    report.fallback = true;
    report.fallback_reason = Some(reason);
    *report
        .extra_by_cause
        .get_mut(ExtraCause::Fallback.name())
        .expect("cause listed") = p.num_bins();
    report.finish_totals(&p);
    if budgets.record_timings {
        report.phase_ms = Some(clock.ms);
    }
    Ok((p, report))
}

/// Runs the scheme for ε in (0, 1/2).
pub fn run_aptas(
    inst: &Instance,
    epsilon: &Rational,
    budgets: &Budgets,
) -> Result<(Packing, SchemeReport)> {
    if *epsilon <= Rational::zero() || *epsilon >= rat(1, 2) {
        return Err(GbpError::InvalidArgument(format!(
            "epsilon {} must lie in (0, 1/2)",
            format_rational(epsilon)
        )));
    }
    opt_guess_loop(inst, epsilon, budgets)
}
