//! Group bin packing: pack items of rational size into unit bins so that no
//! bin holds two items of the same group.
//!
//! The crate provides an exact branch-and-bound solver, the balanced coloring
//! 2-approximation, First-Fit with conflicts, and an asymptotic approximation
//! scheme built from linear shifting, pattern enumeration, conflict swapping,
//! an exact-rational LP for small items and a greedy packer.

pub mod accounting;
pub mod classification;
pub mod error;
pub mod exact;
pub mod harness;
pub mod heuristics;
pub mod lp;
pub mod model;
pub mod patterns;
pub mod scheme;
pub mod shifting;
pub mod small_items;

pub use error::{GbpError, Result};
pub use exact::{feasible_in, solve_bruteforce, solve_exact, Decision, ExactResult, SolveLimits};
pub use heuristics::{balanced_coloring, first_fit_conflicts, Order};
pub use model::io::{instance_from_json, instance_to_json, packing_from_json, packing_to_json};
pub use model::rational::{format_rational, parse_rational, Rational};
pub use model::{
    check_packing, lower_bound, max_group_cardinality, pad_dummy_items, total_size,
    validate_instance, FeasibilityReport, GroupId, Instance, Item, ItemId, Packing, Violation,
    ViolationKind,
};
pub use scheme::{run_aptas, Budgets, SchemeReport};
