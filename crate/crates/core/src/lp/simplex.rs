//! Two-phase primal simplex over exact rationals with Bland's rule.
//!
//! The tableau is kept in dictionary form with sparse rows that only list
//! nonbasic columns. Artificial columns are dropped as soon as they leave the
//! basis.

use crate::error::{GbpError, Result};
use crate::model::Rational;
use num_traits::{Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpRow {
    pub coefs: Vec<(usize, Rational)>,
    pub kind: RowKind,
    pub rhs: Rational,
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub rows: Vec<LpRow>,
    /// Minimized; empty means any basic feasible solution will do.
    pub cost: Vec<(usize, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    /// Structural values of a basic feasible solution.
    Optimal {
        values: Vec<Rational>,
        pivots: usize,
    },
    Infeasible,
}

type Sparse = Vec<(usize, Rational)>;

fn coef(row: &Sparse, col: usize) -> Option<&Rational> {
    row.binary_search_by_key(&col, |e| e.0)
        .ok()
        .map(|k| &row[k].1)
}

/// `a - c·b` without column `skip`.
fn sub_scaled(a: &Sparse, c: &Rational, b: &Sparse, skip: usize) -> Sparse {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(usize::MAX, |e| e.0);
        let cb = b.get(j).map_or(usize::MAX, |e| e.0);
        if ca < cb {
            if ca != skip {
                out.push(a[i].clone());
            }
            i += 1;
        } else if cb < ca {
            if cb != skip {
                out.push((cb, -(c * &b[j].1)));
            }
            j += 1;
        } else {
            if ca != skip {
                let v = &a[i].1 - c * &b[j].1;
                if !v.is_zero() {
                    out.push((ca, v));
                }
            }
            i += 1;
            j += 1;
        }
    }
    out
}

struct Tableau {
    rows: Vec<Sparse>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    obj: Sparse,
    obj_value: Rational,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn is_artificial(&self, col: usize) -> bool {
        col >= self.first_artificial
    }

    fn pivot(&mut self, r: usize, e: usize) {
        self.pivots += 1;
        let a = coef(&self.rows[r], e).expect("pivot entry").clone();
        let leaving = self.basis[r];
        let mut new_row: Sparse = self.rows[r]
            .iter()
            .filter(|x| x.0 != e)
            .map(|(c, v)| (*c, v / &a))
            .collect();
        if !self.is_artificial(leaving) {
            let pos = new_row.partition_point(|x| x.0 < leaving);
            new_row.insert(pos, (leaving, Rational::from_integer(1.into()) / &a));
        }
        let new_rhs = &self.rhs[r] / &a;
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            if let Some(c) = coef(&self.rows[i], e).cloned() {
                self.rows[i] = sub_scaled(&self.rows[i], &c, &new_row, e);
                self.rhs[i] = &self.rhs[i] - &c * &new_rhs;
            }
        }
        if let Some(d) = coef(&self.obj, e).cloned() {
            self.obj = sub_scaled(&self.obj, &d, &new_row, e);
            self.obj_value = &self.obj_value + &d * &new_rhs;
        }
        self.rows[r] = new_row;
        self.rhs[r] = new_rhs;
        self.basis[r] = e;
    }

    /// Runs Bland's rule until no reduced cost is negative.
    fn optimize(&mut self) -> Result<()> {
        loop {
            let Some(e) = self
                .obj
                .iter()
                .find(|(c, d)| d.is_negative() && !self.is_artificial(*c))
                .map(|x| x.0)
            else {
                return Ok(());
            };
            let mut best: Option<(Rational, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if let Some(a) = coef(row, e) {
                    if a.is_positive() {
                        let ratio = &self.rhs[i] / a;
                        let better = match &best {
                            None => true,
                            Some((br, bb, _)) => {
                                ratio < *br || (ratio == *br && self.basis[i] < *bb)
                            }
                        };
                        if better {
                            best = Some((ratio, self.basis[i], i));
                        }
                    }
                }
            }
            let Some((_, _, r)) = best else {
                return Err(GbpError::Invariant("linear program is unbounded".into()));
            };
            self.pivot(r, e);
        }
    }

    fn set_objective(&mut self, cost: &[Rational]) {
        let mut acc: std::collections::BTreeMap<usize, Rational> =
            std::collections::BTreeMap::new();
        let mut value = Rational::zero();
        let basic: std::collections::HashSet<usize> = self.basis.iter().copied().collect();
        for (j, c) in cost.iter().enumerate() {
            if !c.is_zero() && !basic.contains(&j) {
                *acc.entry(j).or_insert_with(Rational::zero) += c;
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost.get(b).cloned().unwrap_or_else(Rational::zero);
            if cb.is_zero() {
                continue;
            }
            value += &cb * &self.rhs[i];
            for (j, a) in &self.rows[i] {
                *acc.entry(*j).or_insert_with(Rational::zero) -= &cb * a;
            }
        }
        self.obj = acc.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        self.obj_value = value;
    }
}

/// Solves `lp`. `crash` proposes `(equality row, variable)` pairs to make
/// basic before phase 1; proposals that would break feasibility are skipped.
pub fn solve(lp: &LinearProgram, crash: &[(usize, usize)]) -> Result<LpOutcome> {
    let n = lp.n_vars;
    let n_le = lp.rows.iter().filter(|r| r.kind == RowKind::Le).count();
    let first_artificial = n + n_le;
    let mut t = Tableau {
        rows: Vec::with_capacity(lp.rows.len()),
        rhs: Vec::with_capacity(lp.rows.len()),
        basis: Vec::with_capacity(lp.rows.len()),
        obj: Vec::new(),
        obj_value: Rational::zero(),
        first_artificial,
        pivots: 0,
    };
    let (mut slack, mut art) = (n, first_artificial);
    for row in &lp.rows {
        let mut coefs = row.coefs.clone();
        coefs.sort_by_key(|e| e.0);
        coefs.retain(|e| !e.1.is_zero());
        let (mut coefs, mut rhs) = (coefs, row.rhs.clone());
        match row.kind {
            RowKind::Le => {
                if rhs.is_negative() {
                    // x ≥ 0 can only satisfy this if some coefficient is negative
                    if coefs.iter().all(|e| !e.1.is_negative()) {
                        return Ok(LpOutcome::Infeasible);
                    }
                    return Err(GbpError::InvalidArgument(
                        "≤ rows with negative right-hand side need ≥ form".into(),
                    ));
                }
                t.basis.push(slack);
                slack += 1;
            }
            RowKind::Eq => {
                if rhs.is_negative() {
                    coefs.iter_mut().for_each(|e| e.1 = -e.1.clone());
                    rhs = -rhs;
                }
                t.basis.push(art);
                art += 1;
            }
        }
        t.rows.push(coefs);
        t.rhs.push(rhs);
    }
    for &(r, var) in crash {
        if !t.is_artificial(t.basis[r]) {
            continue;
        }
        let Some(a) = coef(&t.rows[r], var).cloned() else {
            continue;
        };
        if !a.is_positive() || t.basis.contains(&var) {
            continue;
        }
        let value = &t.rhs[r] / &a;
        let ok = t.rows.iter().enumerate().all(|(i, row)| {
            i == r || coef(row, var).map_or(true, |c| !(&t.rhs[i] - c * &value).is_negative())
        });
        if ok {
            t.pivot(r, var);
        }
    }
    // phase 1
    let mut phase1 = vec![Rational::zero(); art];
    for c in phase1.iter_mut().skip(first_artificial) {
        *c = Rational::from_integer(1.into());
    }
    t.set_objective(&phase1);
    t.optimize()?;
    if t.obj_value.is_positive() {
        return Ok(LpOutcome::Infeasible);
    }
    let mut i = 0;
    while i < t.rows.len() {
        if t.is_artificial(t.basis[i]) {
            if let Some(e) = t.rows[i]
                .iter()
                .find(|x| !t.is_artificial(x.0))
                .map(|x| x.0)
            {
                t.pivot(i, e);
            } else {
                t.rows.remove(i);
                t.rhs.remove(i);
                t.basis.remove(i);
                continue;
            }
        }
        i += 1;
    }
    // phase 2
    if !lp.cost.is_empty() {
        let mut c = vec![Rational::zero(); first_artificial];
        for (j, v) in &lp.cost {
            c[*j] += v;
        }
        t.set_objective(&c);
        t.optimize()?;
    }
    let mut values = vec![Rational::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            values[b] = t.rhs[i].clone();
        }
    }
    Ok(LpOutcome::Optimal {
        values,
        pivots: t.pivots,
    })
}

/// Whether `x ≥ 0` satisfies every row of `lp` exactly.
pub fn satisfies(lp: &LinearProgram, x: &[Rational]) -> bool {
    x.len() == lp.n_vars
        && x.iter().all(|v| !v.is_negative())
        && lp.rows.iter().all(|row| {
            let lhs: Rational = row.coefs.iter().map(|(j, a)| a * &x[*j]).sum();
            match row.kind {
                RowKind::Le => lhs <= row.rhs,
                RowKind::Eq => lhs == row.rhs,
            }
        })
}

/// Rank of a set of sparse rows over `n` columns. Rows with a single live
/// column are peeled first; the rest go through Gaussian elimination.
pub fn sparse_rank(rows: &[Sparse], n: usize) -> usize {
    let mut rows: Vec<Sparse> = rows
        .iter()
        .map(|r| r.iter().filter(|e| !e.1.is_zero()).cloned().collect())
        .collect();
    let mut dead = vec![false; n];
    let mut used = vec![false; rows.len()];
    let mut rank = 0;
    loop {
        let mut progressed = false;
        for i in 0..rows.len() {
            if used[i] {
                continue;
            }
            let live: Vec<usize> = rows[i].iter().filter(|e| !dead[e.0]).map(|e| e.0).collect();
            if live.is_empty() {
                used[i] = true;
            } else if live.len() == 1 {
                used[i] = true;
                dead[live[0]] = true;
                rank += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let mut rest: Vec<Sparse> = rows
        .iter_mut()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(r, _)| r.drain(..).filter(|e| !dead[e.0]).collect())
        .collect();
    // Gaussian elimination on the remaining rows
    let mut col_done = vec![false; n];
    let mut k = 0;
    while k < rest.len() {
        if rest[k].is_empty() {
            rest.swap_remove(k);
            continue;
        }
        let (p, pv) = rest[k][0].clone();
        if col_done[p] {
            unreachable!("eliminated column reappeared");
        }
        col_done[p] = true;
        rank += 1;
        let pivot_row = rest[k].clone();
        for r in rest.iter_mut().skip(k + 1) {
            if let Some(c) = coef(r, p).cloned() {
                *r = sub_scaled(r, &(c / &pv), &pivot_row, p);
            }
        }
        k += 1;
    }
    rank
}
