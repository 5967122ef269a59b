//! `gbp`: generate, solve, check and benchmark group bin packing instances.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gbp_core::harness::{
    check_files, demonstrate_gap, generate, run_bench, BenchConfig, Family, GenSpec,
};
use gbp_core::{
    balanced_coloring, check_packing, first_fit_conflicts, instance_from_json, instance_to_json,
    packing_to_json, parse_rational, run_aptas, solve_exact, Budgets, GbpError, Order, Rational,
    SolveLimits,
};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gbp", version, about = "Group bin packing solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Aptas,
    Balanced,
    Firstfit,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum FfOrderArg {
    Input,
    Decreasing,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Uniform,
    CliqueHeavy,
    Adversarial,
    EqualGroups,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from a JSON spec or from flags.
    Gen {
        /// JSON file holding a generator spec; overrides the family flags.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "uniform")]
        family: FamilyArg,
        /// Item count (uniform, clique_heavy) or group count (equal_groups).
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        groups: usize,
        /// Items per group (equal_groups).
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value = "1/10", value_parser = rational)]
        min_size: Rational,
        #[arg(long, default_value = "3/5", value_parser = rational)]
        max_size: Rational,
        /// Item size (equal_groups).
        #[arg(long, default_value = "1/4", value_parser = rational)]
        size: Rational,
        #[arg(long, default_value = "1/5", value_parser = rational)]
        epsilon: Rational,
        #[arg(long, default_value_t = 10)]
        n_hat: usize,
        #[arg(long, env = "GBP_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pack an instance and verify the result.
    Solve {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long, value_enum, default_value = "aptas")]
        algorithm: Algorithm,
        #[arg(short, long, default_value = "3/10", value_parser = rational)]
        epsilon: Rational,
        #[arg(long)]
        pattern_budget: Option<usize>,
        #[arg(long)]
        assignment_budget: Option<usize>,
        #[arg(long)]
        enum_budget: Option<usize>,
        /// Last iteration of the small-item enumeration.
        #[arg(long)]
        alpha: Option<usize>,
        /// Run the scheme even below its applicability threshold.
        #[arg(long)]
        force_pipeline: bool,
        /// Record wall time per phase in the report.
        #[arg(long)]
        timings: bool,
        #[arg(long, value_enum, default_value = "decreasing")]
        order: FfOrderArg,
        #[arg(long, env = "GBP_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check a packing against an instance; exits 1 when infeasible.
    Check {
        #[arg(short, long)]
        instance: PathBuf,
        #[arg(short, long)]
        packing: PathBuf,
    },
    /// Run a benchmark configuration.
    Bench {
        #[arg(short, long)]
        config: PathBuf,
        /// JSON report; printed to stdout when absent.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, env = "GBP_SEED")]
        seed: Option<u64>,
    },
    /// Build both packings of the adversarial First-Fit family.
    Gap {
        #[arg(short, long, default_value = "1/5", value_parser = rational)]
        epsilon: Rational,
        #[arg(long, default_value_t = 10)]
        n_hat: usize,
        /// Directory for instance.json, optimal.json and greedy.json.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn rational(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(spec: GenSpec, output: Option<&Path>) -> Result<ExitCode> {
    let inst = generate(&spec)?;
    emit(output, &instance_to_json(&inst))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(cmd: Command) -> Result<ExitCode> {
    let Command::Solve {
        input,
        algorithm,
        epsilon,
        pattern_budget,
        assignment_budget,
        enum_budget,
        alpha,
        force_pipeline,
        timings,
        order,
        seed,
        output,
        report,
    } = cmd
    else {
        unreachable!()
    };
    let (inst, warnings) = instance_from_json(&read(&input)?)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let (packing, report_json) = match algorithm {
        Algorithm::Aptas => {
            let mut budgets = Budgets::default();
            if let Some(b) = pattern_budget {
                budgets.pattern_budget = b;
            }
            if let Some(b) = assignment_budget {
                budgets.assignment_budget = b;
            }
            if let Some(b) = enum_budget {
                budgets.enum_budget = b;
            }
            budgets.alpha_override = alpha;
            budgets.enforce_applicability = !force_pipeline;
            budgets.record_timings = timings;
            let (p, r) = run_aptas(&inst, &epsilon, &budgets)?;
            (p, Some(serde_json::to_string_pretty(&r)?))
        }
        Algorithm::Balanced => (balanced_coloring(&inst), None),
        Algorithm::Firstfit => {
            let order = match order {
                FfOrderArg::Input => Order::Input,
                FfOrderArg::Decreasing => Order::Decreasing,
                FfOrderArg::Random => Order::Random(seed),
            };
            (first_fit_conflicts(&inst, &order), None)
        }
        Algorithm::Exact => {
            let r = solve_exact(&inst, &SolveLimits::default())?;
            if !r.proven_optimal {
                eprintln!("warning: search budget exhausted; the packing may not be optimal");
            }
            (r.packing, None)
        }
    };
    let check = check_packing(&inst, &packing);
    emit(output.as_deref(), &packing_to_json(&inst, &packing))?;
    if let (Some(path), Some(text)) = (report.as_deref(), report_json) {
        emit(Some(path), &text)?;
    }
    eprintln!(
        "{} bins ({} core, {} extra)",
        packing.num_bins(),
        packing.core_bins,
        packing.extra_bins()
    );
    if !check.feasible {
        eprintln!("{}", serde_json::to_string_pretty(&check)?);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(instance: &Path, packing: &Path) -> Result<ExitCode> {
    let report = check_files(&read(instance)?, &read(packing)?)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.feasible {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_bench(
    config: &Path,
    json: Option<&Path>,
    csv: Option<&Path>,
    seed: Option<u64>,
) -> Result<ExitCode> {
    let mut cfg: BenchConfig = serde_json::from_str(&read(config)?).map_err(GbpError::from)?;
    if let Some(s) = seed {
        cfg.override_seed(s);
    }
    let report = run_bench(&cfg)?;
    if let Some(path) = csv {
        emit(Some(path), &report.to_csv()?)?;
    }
    emit(json, &report.to_json())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_gap(epsilon: &Rational, n_hat: usize, output: Option<&Path>) -> Result<ExitCode> {
    let demo = demonstrate_gap(epsilon, n_hat)?;
    if let Some(dir) = output {
        fs::create_dir_all(dir)?;
        emit(
            Some(&dir.join("instance.json")),
            &instance_to_json(&demo.instance),
        )?;
        emit(
            Some(&dir.join("optimal.json")),
            &packing_to_json(&demo.instance, &demo.optimal),
        )?;
        emit(
            Some(&dir.join("greedy.json")),
            &packing_to_json(&demo.instance, &demo.greedy),
        )?;
    }
    let summary = serde_json::json!({
        "n_items": demo.instance.n_items(),
        "optimal_bins": demo.optimal.num_bins(),
        "greedy_bins": demo.greedy.num_bins(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen {
            spec,
            family,
            n,
            groups,
            m,
            min_size,
            max_size,
            size,
            epsilon,
            n_hat,
            seed,
            output,
        } => {
            let spec = match spec {
                Some(path) => {
                    let mut s: GenSpec =
                        serde_json::from_str(&read(&path)?).map_err(GbpError::from)?;
                    if std::env::var_os("GBP_SEED").is_some() {
                        s.seed = seed;
                    }
                    s
                }
                None => {
                    let family = match family {
                        FamilyArg::Uniform => Family::Uniform {
                            n,
                            groups,
                            min_size,
                            max_size,
                        },
                        FamilyArg::CliqueHeavy => Family::CliqueHeavy {
                            n,
                            groups,
                            min_size,
                            max_size,
                        },
                        FamilyArg::Adversarial => Family::Adversarial { epsilon, n_hat },
                        FamilyArg::EqualGroups => Family::EqualGroups { n, m, size },
                    };
                    GenSpec {
                        family,
                        seed,
                        name: None,
                    }
                }
            };
            cmd_gen(spec, output.as_deref())
        }
        cmd @ Command::Solve { .. } => cmd_solve(cmd),
        Command::Check { instance, packing } => cmd_check(&instance, &packing),
        Command::Bench {
            config,
            json,
            csv,
            seed,
        } => cmd_bench(&config, json.as_deref(), csv.as_deref(), seed),
        Command::Gap {
            epsilon,
            n_hat,
            output,
        } => cmd_gap(&epsilon, n_hat, output.as_deref()),
    }
}

/// Contract breaches exit with 1, every other error with 2.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<GbpError>() {
        Some(GbpError::Invariant(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
