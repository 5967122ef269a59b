//! Benchmark runner: generates instances, runs each configured algorithm,
//! verifies every packing and tabulates bins against the best known bound.

use super::generate::{adversarial_order, detect_adversarial, generate, GenSpec};
use crate::error::{GbpError, Result};
use crate::exact::{solve_exact, SolveLimits};
use crate::heuristics::{balanced_coloring, first_fit_conflicts, Order};
use crate::model::rational::serde_rational;
use crate::model::{check_packing, lower_bound, Instance, Packing, Rational};
use crate::scheme::{run_aptas, Budgets};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FfOrder {
    Input,
    Decreasing,
    /// Bin-by-bin order of the adversarial family's greedy packing; input
    /// order on other instances.
    Adversarial,
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum AlgoSpec {
    Balanced,
    FirstFit {
        #[serde(default = "default_order")]
        order: FfOrder,
    },
    Exact,
    Aptas {
        #[serde(with = "serde_rational")]
        epsilon: Rational,
        #[serde(default)]
        budgets: Budgets,
    },
}

fn default_order() -> FfOrder {
    FfOrder::Decreasing
}

impl AlgoSpec {
    pub fn label(&self) -> String {
        match self {
            AlgoSpec::Balanced => "balanced".into(),
            AlgoSpec::FirstFit { order } => format!(
                "firstfit_{}",
                serde_json::to_value(order)
                    .expect("order")
                    .as_str()
                    .expect("str")
            ),
            AlgoSpec::Exact => "exact".into(),
            AlgoSpec::Aptas { epsilon, .. } => format!("aptas_{}", crate::format_rational(epsilon)),
        }
    }
}

fn default_exact_max_items() -> usize {
    12
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Base seed for randomized algorithms; instance `i` runs them with
    /// `seed + i`. Instances carry their own generator seed (default 0).
    #[serde(default)]
    pub seed: u64,
    pub instances: Vec<GenSpec>,
    pub algorithms: Vec<AlgoSpec>,
    /// Instances up to this size are solved exactly, for the ratio and for
    /// the `exact` algorithm; larger ones get no `exact` row.
    #[serde(default = "default_exact_max_items")]
    pub exact_max_items: usize,
}

impl BenchConfig {
    /// Replaces every instance seed by `seed + index`.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        for (i, spec) in self.instances.iter_mut().enumerate() {
            spec.seed = seed.wrapping_add(i as u64);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub family: String,
    pub algorithm: String,
    pub n_items: usize,
    pub bins: usize,
    pub lower_bound: usize,
    pub exact_opt: Option<usize>,
    /// bins / max(lower bound, exact optimum when known).
    pub ratio: f64,
    pub core_bins: usize,
    pub extra_bins: usize,
    pub counters: BTreeMap<String, usize>,
    /// Wall time; written to the CSV only, so the JSON stays reproducible.
    #[serde(skip)]
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "instance",
    "family",
    "algorithm",
    "n_items",
    "bins",
    "lower_bound",
    "exact_opt",
    "ratio",
    "core_bins",
    "extra_bins",
    "runtime_ms",
];

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.instance.clone(),
                r.family.clone(),
                r.algorithm.clone(),
                r.n_items.to_string(),
                r.bins.to_string(),
                r.lower_bound.to_string(),
                r.exact_opt.map(|o| o.to_string()).unwrap_or_default(),
                format!("{:.6}", r.ratio),
                r.core_bins.to_string(),
                r.extra_bins.to_string(),
                format!("{:.3}", r.runtime_ms),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| GbpError::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

fn csv_err(e: csv::Error) -> GbpError {
    GbpError::Parse(e.to_string())
}

fn run_algorithm(
    inst: &Instance,
    algo: &AlgoSpec,
    seed: u64,
) -> Result<(Packing, BTreeMap<String, usize>)> {
    Ok(match algo {
        AlgoSpec::Balanced => (balanced_coloring(inst), BTreeMap::new()),
        AlgoSpec::FirstFit { order } => {
            let order = match order {
                FfOrder::Input => Order::Input,
                FfOrder::Decreasing => Order::Decreasing,
                FfOrder::Random => Order::Random(seed),
                FfOrder::Adversarial => match detect_adversarial(inst) {
                    Some((eps, n_hat)) => Order::Explicit(adversarial_order(&eps, n_hat)?),
                    None => Order::Input,
                },
            };
            (first_fit_conflicts(inst, &order), BTreeMap::new())
        }
        AlgoSpec::Exact => {
            let r = solve_exact(inst, &SolveLimits::default())?;
            let counters = BTreeMap::from([
                ("nodes".to_string(), r.nodes_explored as usize),
                ("proven_optimal".to_string(), r.proven_optimal as usize),
            ]);
            (r.packing, counters)
        }
        AlgoSpec::Aptas { epsilon, budgets } => {
            let (p, report) = run_aptas(inst, epsilon, budgets)?;
            let mut counters: BTreeMap<String, usize> = report
                .extra_by_cause
                .iter()
                .map(|(k, v)| (format!("extra_{k}"), *v))
                .collect();
            counters.extend(report.counters.clone());
            counters.insert("fallback".into(), report.fallback as usize);
            (p, counters)
        }
    })
}

/// Rows follow the config order: instances outer, algorithms inner. The
/// exact solver is skipped above `exact_max_items`. Any infeasible packing
/// aborts the run.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for (i, spec) in config.instances.iter().enumerate() {
        let inst = generate(spec)?;
        let seed = config.seed.wrapping_add(i as u64);
        let lb = lower_bound(&inst);
        let exact_opt = if inst.n_items() <= config.exact_max_items {
            let r = solve_exact(&inst, &SolveLimits::default())?;
            r.proven_optimal.then_some(r.opt)
        } else {
            None
        };
        for algo in &config.algorithms {
            if *algo == AlgoSpec::Exact && inst.n_items() > config.exact_max_items {
                continue;
            }
            let start = Instant::now();
            let (packing, counters) = run_algorithm(&inst, algo, seed)?;
            let runtime_ms = start.elapsed().as_secs_f64() * 1000.0;
            let check = check_packing(&inst, &packing);
            if !check.feasible {
                return Err(GbpError::Invariant(format!(
                    "{} produced an infeasible packing on {}: {:?}",
                    algo.label(),
                    spec.label(),
                    check.violations
                )));
            }
            let denom = lb.max(exact_opt.unwrap_or(0));
            report.rows.push(BenchRow {
                instance: spec.label(),
                family: spec.family_name().into(),
                algorithm: algo.label(),
                n_items: inst.n_items(),
                bins: packing.num_bins(),
                lower_bound: lb,
                exact_opt,
                ratio: if denom == 0 {
                    1.0
                } else {
                    packing.num_bins() as f64 / denom as f64
                },
                core_bins: packing.core_bins,
                extra_bins: packing.extra_bins(),
                counters,
                runtime_ms,
            });
        }
    }
    Ok(report)
}
