//! The partition polytope for small items, an exact vertex finder, and
//! structural checks on the vertices it returns.

pub mod simplex;

use crate::error::{GbpError, Result};
use crate::model::rational::format_rational;
use crate::model::{GroupId, ItemId, Rational};
use num_traits::{One, Zero};
use simplex::{LinearProgram, LpOutcome, LpRow, RowKind};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyItem {
    pub id: ItemId,
    pub size: Rational,
    pub group: GroupId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyType {
    pub bins: usize,
    pub free: Rational,
    /// The fresh empty type; the vertex finder prefers not to use it.
    pub extra: bool,
    /// Items per group already packed in this type's bins, excluding
    /// small-group large items.
    pub content: BTreeMap<GroupId, usize>,
}

impl PolyType {
    /// L_{t,j} = |t| − content of group j.
    pub fn card_bound(&self, g: GroupId) -> i64 {
        self.bins as i64 - *self.content.get(&g).unwrap_or(&0) as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    Capacity { t: usize },
    Assignment { item: usize },
    Cardinality { group: GroupId, t: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub coefs: Vec<(usize, Rational)>,
    pub equality: bool,
    pub rhs: Rational,
}

/// Variables exist only for allowed pairs, s ≤ ε·f(t); the others are fixed at 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPolytope {
    pub items: Vec<PolyItem>,
    pub types: Vec<PolyType>,
    pub epsilon: Rational,
    /// `(item index, type index)` per variable.
    pub vars: Vec<(usize, usize)>,
    pub constraints: Vec<Constraint>,
}

pub fn allowed(size: &Rational, t: &PolyType, epsilon: &Rational) -> bool {
    *size <= epsilon * &t.free
}

impl PartitionPolytope {
    pub fn new(items: Vec<PolyItem>, types: Vec<PolyType>, epsilon: Rational) -> PartitionPolytope {
        let mut vars = Vec::new();
        let mut var_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (i, it) in items.iter().enumerate() {
            for (t, ty) in types.iter().enumerate() {
                if allowed(&it.size, ty, &epsilon) {
                    var_of.insert((i, t), vars.len());
                    vars.push((i, t));
                }
            }
        }
        let mut constraints = Vec::new();
        for (t, ty) in types.iter().enumerate() {
            let coefs: Vec<(usize, Rational)> = vars
                .iter()
                .enumerate()
                .filter(|(_, v)| v.1 == t)
                .map(|(k, v)| (k, items[v.0].size.clone()))
                .collect();
            constraints.push(Constraint {
                kind: ConstraintKind::Capacity { t },
                coefs,
                equality: false,
                rhs: &ty.free * Rational::from_integer(ty.bins.into()),
            });
        }
        for i in 0..items.len() {
            let coefs = (0..types.len())
                .filter_map(|t| var_of.get(&(i, t)).map(|&k| (k, Rational::one())))
                .collect();
            constraints.push(Constraint {
                kind: ConstraintKind::Assignment { item: i },
                coefs,
                equality: true,
                rhs: Rational::one(),
            });
        }
        let mut by_group: BTreeMap<GroupId, Vec<usize>> = BTreeMap::new();
        for (i, it) in items.iter().enumerate() {
            by_group.entry(it.group).or_default().push(i);
        }
        for (&g, members) in &by_group {
            for (t, ty) in types.iter().enumerate() {
                let coefs: Vec<(usize, Rational)> = members
                    .iter()
                    .filter_map(|&i| var_of.get(&(i, t)).map(|&k| (k, Rational::one())))
                    .collect();
                // a bound at least the number of candidates can never bind
                if coefs.is_empty() || ty.card_bound(g) >= coefs.len() as i64 {
                    continue;
                }
                constraints.push(Constraint {
                    kind: ConstraintKind::Cardinality { group: g, t },
                    coefs,
                    equality: false,
                    rhs: Rational::from_integer(ty.card_bound(g).into()),
                });
            }
        }
        PartitionPolytope {
            items,
            types,
            epsilon,
            vars,
            constraints,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, item: usize, t: usize) -> Option<usize> {
        self.vars.iter().position(|&v| v == (item, t))
    }

    fn linear_program(&self) -> LinearProgram {
        let rows = self
            .constraints
            .iter()
            .map(|c| LpRow {
                coefs: c.coefs.clone(),
                kind: if c.equality { RowKind::Eq } else { RowKind::Le },
                rhs: c.rhs.clone(),
            })
            .collect();
        let cost = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| self.types[v.1].extra)
            .map(|(k, _)| (k, Rational::one()))
            .collect();
        LinearProgram {
            n_vars: self.n_vars(),
            rows,
            cost,
        }
    }

    /// Text form: one `var` line per variable, then one line per constraint
    /// as `<tag> <ids> : <var>:<coef> ... <op> <rhs>`.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        for (k, &(i, t)) in self.vars.iter().enumerate() {
            let _ = writeln!(out, "var {k} item {} type {t}", self.items[i].id);
        }
        for c in &self.constraints {
            let tag = match c.kind {
                ConstraintKind::Capacity { t } => format!("cap {t}"),
                ConstraintKind::Assignment { item } => format!("assign {}", self.items[item].id),
                ConstraintKind::Cardinality { group, t } => format!("card {group} {t}"),
            };
            let terms: Vec<String> = c
                .coefs
                .iter()
                .map(|(k, a)| format!("{k}:{}", format_rational(a)))
                .collect();
            let op = if c.equality { "=" } else { "<=" };
            let _ = writeln!(
                out,
                "{tag} : {} {op} {}",
                terms.join(" "),
                format_rational(&c.rhs)
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSolution {
    /// One value per polytope variable.
    pub values: Vec<Rational>,
    /// Rank of the constraints tight at `values`; equals the variable count.
    pub tight_rank: usize,
    pub pivots: usize,
}

impl VertexSolution {
    pub fn value(&self, p: &PartitionPolytope, item: usize, t: usize) -> Rational {
        p.var_index(item, t)
            .map_or_else(Rational::zero, |k| self.values[k].clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VertexOutcome {
    Vertex(VertexSolution),
    Infeasible,
}

/// Re-substitutes `x` into every constraint. Returns the first violated one.
pub fn check_point(p: &PartitionPolytope, x: &[Rational]) -> std::result::Result<(), String> {
    if x.len() != p.n_vars() {
        return Err(format!("expected {} values, got {}", p.n_vars(), x.len()));
    }
    if let Some(k) = x.iter().position(|v| *v < Rational::zero()) {
        return Err(format!("variable {k} is negative"));
    }
    for c in &p.constraints {
        let lhs: Rational = c.coefs.iter().map(|(k, a)| a * &x[*k]).sum();
        let ok = if c.equality {
            lhs == c.rhs
        } else {
            lhs <= c.rhs
        };
        if !ok {
            return Err(format!("{:?}: lhs {lhs} vs rhs {}", c.kind, c.rhs));
        }
    }
    Ok(())
}

/// Rank of the constraints (including x ≥ 0) tight at `x`.
pub fn tight_rank(p: &PartitionPolytope, x: &[Rational]) -> usize {
    let mut rows: Vec<Vec<(usize, Rational)>> = Vec::new();
    for (k, v) in x.iter().enumerate() {
        if v.is_zero() {
            rows.push(vec![(k, Rational::one())]);
        }
    }
    for c in &p.constraints {
        let lhs: Rational = c.coefs.iter().map(|(k, a)| a * &x[*k]).sum();
        if lhs == c.rhs {
            let mut r = c.coefs.clone();
            r.sort_by_key(|e| e.0);
            rows.push(r);
        }
    }
    simplex::sparse_rank(&rows, p.n_vars())
}

/// Greedy integral start: each item goes to the first allowed non-extra type
/// with room, the extra type last.
fn crash(p: &PartitionPolytope) -> Vec<(usize, usize)> {
    let mut load: Vec<Rational> = vec![Rational::zero(); p.types.len()];
    let mut count: BTreeMap<(GroupId, usize), i64> = BTreeMap::new();
    let mut order: Vec<usize> = (0..p.types.len()).collect();
    order.sort_by_key(|&t| p.types[t].extra);
    let var_of: BTreeMap<(usize, usize), usize> =
        p.vars.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let assign_row: BTreeMap<usize, usize> = p
        .constraints
        .iter()
        .enumerate()
        .filter_map(|(r, c)| match c.kind {
            ConstraintKind::Assignment { item } => Some((item, r)),
            _ => None,
        })
        .collect();
    let mut out = Vec::new();
    for (i, it) in p.items.iter().enumerate() {
        for &t in &order {
            let Some(&k) = var_of.get(&(i, t)) else {
                continue;
            };
            let ty = &p.types[t];
            let cap = &ty.free * Rational::from_integer(ty.bins.into());
            let c = count.entry((it.group, t)).or_insert(0);
            if &load[t] + &it.size <= cap && *c < ty.card_bound(it.group) {
                load[t] += &it.size;
                *c += 1;
                out.push((assign_row[&i], k));
                break;
            }
        }
    }
    out
}

/// A vertex of `p` in exact arithmetic, or `Infeasible` when phase 1 ends
/// with a positive artificial sum. Among vertices, usage of the extra type is
/// minimized.
pub fn find_vertex(p: &PartitionPolytope) -> Result<VertexOutcome> {
    let lp = p.linear_program();
    match simplex::solve(&lp, &crash(p))? {
        LpOutcome::Infeasible => Ok(VertexOutcome::Infeasible),
        LpOutcome::Optimal { values, pivots } => {
            check_point(p, &values)
                .map_err(|e| GbpError::Invariant(format!("simplex point violates {e}")))?;
            let rank = tight_rank(p, &values);
            if rank != p.n_vars() {
                return Err(GbpError::Invariant(format!(
                    "tight rank {rank} below {} variables",
                    p.n_vars()
                )));
            }
            Ok(VertexOutcome::Vertex(VertexSolution {
                values,
                tight_rank: rank,
                pivots,
            }))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FractionalStats {
    pub fractional_groups: usize,
    /// Fractional items per group, only for groups that have some.
    pub per_group: BTreeMap<GroupId, usize>,
    /// Item indices with some fractional coordinate.
    pub fractional_items: Vec<usize>,
}

fn is_integral(v: &Rational) -> bool {
    v.is_integer()
}

/// Counts fractional items and groups and checks that at most |T| groups and
/// at most 2|T| items per group are fractional.
pub fn analyze_fractional(p: &PartitionPolytope, v: &VertexSolution) -> Result<FractionalStats> {
    let mut stats = FractionalStats::default();
    let mut frac = vec![false; p.items.len()];
    for (k, &(i, _)) in p.vars.iter().enumerate() {
        if !is_integral(&v.values[k]) {
            frac[i] = true;
        }
    }
    for (i, &f) in frac.iter().enumerate() {
        if f {
            stats.fractional_items.push(i);
            *stats.per_group.entry(p.items[i].group).or_insert(0) += 1;
        }
    }
    stats.fractional_groups = stats.per_group.len();
    let nt = p.types.len();
    if stats.fractional_groups > nt {
        return Err(GbpError::Invariant(format!(
            "{} fractional groups exceed {nt} types",
            stats.fractional_groups
        )));
    }
    if let Some((g, c)) = stats.per_group.iter().find(|(_, &c)| c > 2 * nt) {
        return Err(GbpError::Invariant(format!(
            "group {g} has {c} fractional items, above 2·{nt}"
        )));
    }
    Ok(stats)
}

/// The constraint matrix of the single-group polytope for group `g`: columns
/// are (item of g, type) pairs; rows are the forbidden pairs (y ≤ 0), the
/// negated assignment rows and the cardinality rows per type.
pub fn group_matrix(p: &PartitionPolytope, g: GroupId) -> Vec<Vec<i64>> {
    let members: Vec<usize> = (0..p.items.len())
        .filter(|&i| p.items[i].group == g)
        .collect();
    let nt = p.types.len();
    let col = |m: usize, t: usize| m * nt + t;
    let ncols = members.len() * nt;
    let mut rows = Vec::new();
    for (m, &i) in members.iter().enumerate() {
        for (t, ty) in p.types.iter().enumerate() {
            if !allowed(&p.items[i].size, ty, &p.epsilon) {
                let mut r = vec![0; ncols];
                r[col(m, t)] = 1;
                rows.push(r);
            }
        }
    }
    for (m, &i) in members.iter().enumerate() {
        let mut r = vec![0; ncols];
        for (t, ty) in p.types.iter().enumerate() {
            if allowed(&p.items[i].size, ty, &p.epsilon) {
                r[col(m, t)] = -1;
            }
        }
        rows.push(r);
    }
    for (t, ty) in p.types.iter().enumerate() {
        let mut r = vec![0; ncols];
        for (m, &i) in members.iter().enumerate() {
            if allowed(&p.items[i].size, ty, &p.epsilon) {
                r[col(m, t)] = 1;
            }
        }
        rows.push(r);
    }
    rows
}

/// Sufficient condition for total unimodularity: entries in {−1, 0, 1}, at
/// most two nonzeros per column, and opposite signs when there are two.
pub fn check_simplified_tu(matrix: &[Vec<i64>]) -> bool {
    let ncols = matrix.first().map_or(0, Vec::len);
    if matrix
        .iter()
        .any(|r| r.len() != ncols || r.iter().any(|&a| !(-1..=1).contains(&a)))
    {
        return false;
    }
    (0..ncols).all(|c| {
        let nz: Vec<i64> = matrix.iter().map(|r| r[c]).filter(|&a| a != 0).collect();
        match nz.len() {
            0 | 1 => true,
            2 => nz[0] == -nz[1],
            _ => false,
        }
    })
}

pub fn verify_tu_substructure(p: &PartitionPolytope, g: GroupId) -> bool {
    check_simplified_tu(&group_matrix(p, g))
}
