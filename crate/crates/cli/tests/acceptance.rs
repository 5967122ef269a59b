//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use gbp_core::accounting::ExtraCause;
use gbp_core::classification::{classify, find_k, ClassParams};
use gbp_core::harness::{
    adversarial_instance, adversarial_order, demonstrate_gap, generate, Family, GenSpec,
};
use gbp_core::heuristics::instance_coloring_bound;
use gbp_core::lp::{
    analyze_fractional, check_point, find_vertex, verify_tu_substructure, PartitionPolytope,
    PolyItem, PolyType, VertexOutcome,
};
use gbp_core::patterns::{build_slot_alphabet, count_conflicts, swapping, SlotPacking};
use gbp_core::shifting::{
    linear_shift, round_instance, shift_swap_small_groups, RoundedInstance, TableScope,
};
use gbp_core::small_items::{greedy_pack, GreedyBin};
use gbp_core::{
    balanced_coloring, check_packing, first_fit_conflicts, run_aptas, solve_bruteforce,
    solve_exact, Budgets, GbpError, Instance, Order, Packing, Rational, SolveLimits,
};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn int(n: usize) -> Rational {
    Rational::from_integer(n.into())
}

/// `n` items with sizes k/den, k in [lo, hi], groups renumbered densely.
fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_groups: usize,
    lo: i64,
    hi: i64,
    den: i64,
) -> Instance {
    let mut dense = BTreeMap::new();
    let items: Vec<(Rational, usize)> = (0..n)
        .map(|_| {
            let g = rng.gen_range(0..max_groups);
            let next = dense.len();
            (
                rat(rng.gen_range(lo..=hi), den),
                *dense.entry(g).or_insert(next),
            )
        })
        .collect();
    Instance::new(dense.len(), items).unwrap()
}

fn exact_opt(inst: &Instance) -> usize {
    let limits = SolveLimits {
        max_items: 200,
        ..SolveLimits::default()
    };
    let r = solve_exact(inst, &limits).unwrap();
    assert!(r.proven_optimal, "exact search did not finish");
    r.opt
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn coloring_bound() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    let runs = 1200;
    for _ in 0..runs {
        let n = rng.gen_range(0..=60);
        let groups = rng.gen_range(1..=12);
        let inst = random_instance(&mut rng, n, groups, 1, 100, 100);
        let p = balanced_coloring(&inst);
        if !check_packing(&inst, &p).feasible || p.num_bins() > instance_coloring_bound(&inst) {
            violations += 1;
        }
    }
    let t = start.elapsed();
    verdict(
        violations == 0 && t < Duration::from_secs(10),
        format!("{runs} instances, {violations} violations, limit 10s"),
    )
}

fn adversarial_gap() -> Verdict {
    let start = Instant::now();
    let d = demonstrate_gap(&rat(1, 5), 10).unwrap();
    let mut ok = d.optimal.num_bins() == 10
        && d.greedy.num_bins() == 18
        && check_packing(&d.instance, &d.optimal).feasible
        && check_packing(&d.instance, &d.greedy).feasible;
    let mut confirmed = Vec::new();
    for (eps, n_hat) in [(rat(1, 2), 2), (rat(1, 2), 4), (rat(1, 5), 5)] {
        let inst = adversarial_instance(&eps, n_hat).unwrap();
        let opt = exact_opt(&inst);
        ok &= opt == n_hat;
        confirmed.push(format!("N̂={n_hat}: OPT={opt}"));
    }
    let t = start.elapsed();
    verdict(
        ok && t < Duration::from_secs(5),
        format!(
            "{} and {} bins; {}; limit 5s",
            d.optimal.num_bins(),
            d.greedy.num_bins(),
            confirmed.join(", ")
        ),
    )
}

fn exact_matches_bruteforce() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.gen_range(0..=8);
        let groups = rng.gen_range(1..=4);
        let inst = random_instance(&mut rng, n, groups, 1, 20, 20);
        let a = solve_exact(&inst, &SolveLimits::default()).unwrap();
        let b = solve_bruteforce(&inst).unwrap();
        if a.opt != b.opt || !a.proven_optimal {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    verdict(
        mismatches == 0 && t < Duration::from_secs(60),
        format!("200 instances, {mismatches} mismatches, limit 60s"),
    )
}

fn corpus() -> Vec<Instance> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..120 {
        let n = rng.gen_range(0..=12);
        let groups = rng.gen_range(1..=5);
        out.push(random_instance(&mut rng, n, groups, 1, 20, 20));
    }
    for seed in 0..20 {
        let (lo, hi) = (rat(1, 20), rat(3, 5));
        for family in [
            Family::Uniform {
                n: 40,
                groups: 6,
                min_size: lo.clone(),
                max_size: hi.clone(),
            },
            Family::CliqueHeavy {
                n: 40,
                groups: 6,
                min_size: lo.clone(),
                max_size: hi.clone(),
            },
        ] {
            out.push(
                generate(&GenSpec {
                    family,
                    seed,
                    name: None,
                })
                .unwrap(),
            );
        }
    }
    out.push(
        generate(&GenSpec {
            family: Family::EqualGroups {
                n: 3,
                m: 4,
                size: rat(1, 4),
            },
            seed: 0,
            name: None,
        })
        .unwrap(),
    );
    for n_hat in [5, 10] {
        out.push(adversarial_instance(&rat(1, 5), n_hat).unwrap());
    }
    out
}

fn feasibility_everywhere() -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut record = |name: &str, inst: &Instance, p: &Packing| {
        checked += 1;
        if !check_packing(inst, p).feasible {
            bad.push(name.to_string());
        }
    };
    let forced = Budgets::exhaustive();
    for inst in corpus() {
        record("balanced", &inst, &balanced_coloring(&inst));
        for order in [Order::Input, Order::Decreasing, Order::Random(9)] {
            record("firstfit", &inst, &first_fit_conflicts(&inst, &order));
        }
        if inst.n_items() <= 12 {
            record(
                "exact",
                &inst,
                &solve_exact(&inst, &SolveLimits::default()).unwrap().packing,
            );
            for eps in [rat(3, 10), rat(9, 20)] {
                record(
                    "aptas forced",
                    &inst,
                    &run_aptas(&inst, &eps, &forced).unwrap().0,
                );
            }
        }
        record(
            "aptas",
            &inst,
            &run_aptas(&inst, &rat(3, 10), &Budgets::default())
                .unwrap()
                .0,
        );
    }
    for n_hat in [5, 10] {
        let d = demonstrate_gap(&rat(1, 5), n_hat).unwrap();
        record("gap optimal", &d.instance, &d.optimal);
        record("gap greedy", &d.instance, &d.greedy);
        let order = Order::Explicit(adversarial_order(&rat(1, 5), n_hat).unwrap());
        record(
            "firstfit adversarial order",
            &d.instance,
            &first_fit_conflicts(&d.instance, &order),
        );
    }
    verdict(
        bad.is_empty(),
        format!(
            "{checked} packings checked, {} infeasible {:?}",
            bad.len(),
            bad
        ),
    )
}

fn rounding_never_raises_opt() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checks = 0;
    let mut violations = 0;
    let mut rejected = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=10);
        let groups = rng.gen_range(1..=4);
        let inst = random_instance(&mut rng, n, groups, 1, 20, 20);
        let opt = exact_opt(&inst);
        let mut rounded: Vec<RoundedInstance> = Vec::new();
        // the scheme's own rounding at the true optimum
        for eps in [rat(3, 10), rat(9, 20)] {
            let k = find_k(&inst, &eps, opt).unwrap();
            let params = ClassParams {
                epsilon: eps,
                opt_guess: opt,
                k,
            };
            let (items, groups) = classify(&inst, &params).unwrap();
            match round_instance(&inst, &items, &groups, &params) {
                Ok(r) => rounded.push(r),
                Err(GbpError::GuessRejected(_)) => rejected += 1,
                Err(e) => panic!("{e}"),
            }
        }
        // per-group shifting with larger classes than desk-scale guesses give
        for q in [2, 3] {
            let mut r = RoundedInstance::identity(&inst);
            for (g, ids) in inst.groups().iter().enumerate() {
                r.add_table(
                    linear_shift(TableScope::Group(g), ids, |id| inst.size(id).clone(), q),
                    ExtraCause::ShiftLarge,
                );
            }
            rounded.push(r);
        }
        for r in rounded {
            let (sub, _) = r.to_instance().unwrap();
            checks += 1;
            if exact_opt(&sub) > opt {
                violations += 1;
            }
        }
    }
    verdict(violations == 0, format!("100 instances, {checks} roundings, {violations} violations, {rejected} guesses rejected"))
}

fn swapping_resolves_conflicts() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let eps = rat(1, 4);
    let mut fixtures = 0;
    let mut failures = 0;
    let mut worst = 0.0f64;
    let mut swaps = 0;
    let mut conflicted = 0;
    while fixtures < 500 {
        let g: usize = rng.gen_range(128..=256);
        let k = 1;
        // each group has fewer than ε^{k+2}·g large items
        let cap = (g - 1) / 64;
        let target = 2 * g;
        let mut items = Vec::new();
        let mut group = 0;
        while items.len() < target {
            let c = rng.gen_range(1..=cap);
            for _ in 0..c {
                items.push((rat(rng.gen_range(25..=50), 100), group));
            }
            group += 1;
        }
        let inst = Instance::new(group, items).unwrap();
        let params = ClassParams {
            epsilon: eps.clone(),
            opt_guess: g,
            k,
        };
        let (classes, groups) = classify(&inst, &params).unwrap();
        let q = 2 * g / 8;
        let bad_budget = int(2) * &eps * &eps * int(g);
        assert!(groups.large_groups.is_empty() && bad_budget < int(q - 2));
        let rinst = shift_swap_small_groups(&inst, &classes, &groups, &params).unwrap();
        let alphabet = build_slot_alphabet(&rinst);
        // each slot class goes to distinct random bins; conflicts come from
        // same-group items of different classes meeting in one bin
        let mut bins = vec![Vec::new(); g];
        let mut keys = vec![Vec::new(); g];
        for (s, members) in alphabet.members.iter().enumerate() {
            let mut targets: Vec<usize> = (0..g).collect();
            targets.shuffle(&mut rng);
            for (&id, &b) in members.iter().zip(&targets) {
                bins[b].push(id);
                keys[b].push(s);
            }
        }
        for key in &mut keys {
            key.sort_unstable();
        }
        let tentative = SlotPacking { bins, keys };
        let n = rinst.base.n_items();
        conflicted += usize::from(count_conflicts(&tentative.bins, |i| rinst.base.group(i)) > 0);
        match swapping(&tentative, &alphabet, &rinst) {
            Ok((fixed, stats)) => {
                let searches = stats.examined as f64 / (n * n) as f64;
                worst = worst.max(searches);
                swaps += stats.swaps;
                if count_conflicts(&fixed.bins, |i| rinst.base.group(i)) != 0
                    || stats.examined > n * n
                {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
        fixtures += 1;
    }
    verdict(failures == 0, format!(
            "{fixtures} fixtures ({conflicted} with conflicts, {swaps} swaps), {failures} failures, max examined/N² = {worst:.5}"
        ))
}

fn random_polytope(rng: &mut ChaCha8Rng) -> PartitionPolytope {
    let eps = rat(1, 2);
    let nt = rng.gen_range(1..=5);
    let ng = rng.gen_range(1..=8);
    // item counts skewed toward small polytopes, up to 200
    let ni = 1 + (rng.gen_range(0..200usize).pow(2) / 200);
    let mut types = Vec::new();
    for t in 0..nt {
        let mut content = BTreeMap::new();
        for g in 0..ng {
            let c = rng.gen_range(0..=2usize);
            if c > 0 && t + 1 < nt {
                content.insert(g, c);
            }
        }
        let bins = rng.gen_range(1..=6) * 3;
        let extra = t + 1 == nt;
        // the last type is empty and roomy, which makes the polytope feasible
        let free = if extra {
            Rational::one()
        } else {
            rat(rng.gen_range(1..=10), 10)
        };
        let bins = if extra { bins.max(ni) } else { bins };
        types.push(PolyType {
            bins,
            free,
            extra,
            content,
        });
    }
    let items = (0..ni)
        .map(|id| PolyItem {
            id,
            size: rat(rng.gen_range(1..=50), 100),
            group: rng.gen_range(0..ng),
        })
        .collect();
    PartitionPolytope::new(items, types, eps)
}

fn vertex_structure() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut vertices = 0;
    let mut failures = 0;
    let mut max_items = 0;
    let mut fractional = 0;
    while vertices < 1000 {
        let p = random_polytope(&mut rng);
        max_items = max_items.max(p.items.len());
        let VertexOutcome::Vertex(v) = find_vertex(&p).unwrap() else {
            continue;
        };
        vertices += 1;
        let t = p.types.len();
        let mut ok = check_point(&p, &v.values).is_ok();
        match analyze_fractional(&p, &v) {
            Ok(stats) => {
                fractional += stats.fractional_items.len();
                ok &= stats.fractional_groups <= t;
                ok &= stats.per_group.values().all(|&c| c <= 2 * t);
            }
            Err(_) => ok = false,
        }
        let groups: std::collections::BTreeSet<usize> = p.items.iter().map(|i| i.group).collect();
        ok &= groups.iter().all(|&g| verify_tu_substructure(&p, g));
        if !ok {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!("{vertices} vertices (up to {max_items} items), {failures} failures, {fractional} fractional items in total"),
    )
}

fn greedy_never_fails() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = 0;
    for _ in 0..600 {
        // δ = 1/4: items ≤ f/4, total ≤ (3/4)·f·|t|, at most |t| items per group
        let t = rng.gen_range(1..=12);
        let f = rat(rng.gen_range(1..=20), 20);
        let ng = rng.gen_range(1..=6);
        let budget = rat(3, 4) * &f * int(t);
        let mut per_group = vec![0usize; ng];
        let mut total = Rational::zero();
        let mut items = Vec::new();
        for id in 0..rng.gen_range(0..=t * ng) {
            let size = &f * rat(rng.gen_range(1..=25), 100);
            let g = rng.gen_range(0..ng);
            if per_group[g] < t && &total + &size <= budget {
                per_group[g] += 1;
                total += &size;
                items.push((id, size, g));
            }
        }
        let bins = vec![
            GreedyBin {
                capacity: f.clone(),
                blocked: Default::default()
            };
            t + t.div_ceil(2)
        ];
        match greedy_pack(&items, &bins) {
            Ok(out) => {
                let size: BTreeMap<usize, Rational> =
                    items.iter().map(|(i, s, _)| (*i, s.clone())).collect();
                let overfull = out
                    .bins
                    .iter()
                    .any(|b| b.iter().map(|i| size[i].clone()).sum::<Rational>() > f);
                if overfull || out.bins.iter().map(Vec::len).sum::<usize>() != items.len() {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    verdict(
        failures == 0,
        format!("600 fixtures, {failures} failures or overfills"),
    )
}

fn tiny_end_to_end() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let budgets = Budgets::exhaustive();
    let mut runs = 0;
    let mut failures = Vec::new();
    let mut kept = 0;
    let mut exhaustive = 0;
    for i in 0..60 {
        let n = rng.gen_range(1..=10);
        let groups = rng.gen_range(1..=4);
        let inst = random_instance(&mut rng, n, groups, 1, 20, 20);
        let opt = exact_opt(&inst);
        let fallback = balanced_coloring(&inst).num_bins();
        for eps in [rat(3, 10), rat(9, 20)] {
            runs += 1;
            let (p, r) = run_aptas(&inst, &eps, &budgets).unwrap();
            let f = &r.flags;
            exhaustive += usize::from(
                f.patterns_exhaustive && f.assignments_exhaustive && f.enumeration_exhaustive,
            );
            kept += usize::from(!r.fallback);
            let ok = check_packing(&inst, &p).feasible
                && p.num_bins() <= opt + r.extra_bins
                && p.num_bins() <= fallback
                && r.attributed_extra() == r.extra_bins
                && r.core_bins + r.extra_bins == p.num_bins();
            if !ok {
                failures.push(i);
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!("{runs} runs, {} failures, pipeline output kept in {kept}, all phases exhaustive in {exhaustive}", failures.len()),
    )
}

fn bench_is_deterministic() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "seed": 17,
        "instances": [
            {"family": "uniform", "n": 10, "groups": 3, "min_size": "0.05", "max_size": "0.6", "seed": 1},
            {"family": "clique_heavy", "n": 30, "groups": 5, "min_size": "0.05", "max_size": "0.5", "seed": 2},
            {"family": "adversarial", "epsilon": "1/5", "n_hat": 5}
        ],
        "algorithms": [
            {"algorithm": "balanced"},
            {"algorithm": "first_fit", "order": "adversarial"},
            {"algorithm": "first_fit", "order": "random"},
            {"algorithm": "exact"},
            {"algorithm": "aptas", "epsilon": "0.3"},
            {"algorithm": "aptas", "epsilon": "0.45", "budgets": {"enforce_applicability": false}}
        ]
    }"#;
    let cfg = dir.path().join("bench.json");
    std::fs::write(&cfg, config).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_gbp"))
            .args(["bench", "-c"])
            .arg(&cfg)
            .arg("--json")
            .arg(&out)
            .env_remove("GBP_SEED")
            .status()
            .unwrap();
        (status.success(), std::fs::read(&out).unwrap_or_default())
    };
    let (ok_a, a) = run("a.json");
    let (ok_b, b) = run("b.json");
    verdict(
        ok_a && ok_b && !a.is_empty() && a == b,
        format!("{} bytes, identical: {}", a.len(), a == b),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        (
            "balanced coloring within the coloring bound",
            coloring_bound,
        ),
        ("adversarial First-Fit gap", adversarial_gap),
        ("exact solver matches brute force", exact_matches_bruteforce),
        ("every emitted packing is feasible", feasibility_everywhere),
        (
            "rounding never raises the optimum",
            rounding_never_raises_opt,
        ),
        ("swapping resolves conflicts", swapping_resolves_conflicts),
        ("LP vertex structure", vertex_structure),
        ("greedy packing never fails", greedy_never_fails),
        ("tiny end-to-end scheme runs", tiny_end_to_end),
        ("bench reports are deterministic", bench_is_deterministic),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {status}: {name} ({}; {:.2?})",
            i + 1,
            v.detail,
            start.elapsed()
        );
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
