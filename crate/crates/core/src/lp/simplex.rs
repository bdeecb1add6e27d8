//! Exact two-phase dense-tableau simplex with Bland's anti-cycling rule.
//!
//! The efficiency-bound programs built elsewhere in this crate are heavily
//! degenerate by design — their optimal certificates make whole families of
//! rows tight simultaneously — so anti-cycling is mandatory and "tight" must
//! be decided exactly. Everything here is plain field arithmetic over the
//! generic scalar; instantiate with [`crate::Rat`] for exact solves.
//!
//! Bland's rule as implemented: the entering column is the *lowest-index*
//! column with negative reduced cost; among rows minimizing the ratio test,
//! the leaving row is the one whose basic variable has the lowest index.
//! This pair of choices provably never cycles.

use std::cmp::Ordering;

use crate::scalar::Scalar;

/// Relation of one constraint row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One constraint row: `coeffs · x <relation> rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

/// A linear program in the form `min objective · x` subject to the given
/// rows and `x >= 0` for every variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearProgram<S> {
    /// Display names, one per variable (e.g. `v1(3)`).
    pub variable_names: Vec<String>,
    /// Minimized objective coefficients, one per variable.
    pub objective: Vec<S>,
    pub constraints: Vec<Constraint<S>>,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn num_variables(&self) -> usize {
        self.objective.len()
    }

    /// Exact feasibility test of a candidate point (includes `x >= 0`).
    pub fn is_feasible_point(&self, x: &[S]) -> bool {
        if x.len() != self.num_variables() || x.iter().any(|v| *v < S::zero()) {
            return false;
        }
        self.constraints.iter().all(|c| {
            let lhs: S = c
                .coeffs
                .iter()
                .zip(x)
                .map(|(a, v)| a.clone() * v.clone())
                .sum();
            match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Eq => lhs == c.rhs,
                Relation::Ge => lhs >= c.rhs,
            }
        })
    }

    /// Objective value at a point.
    pub fn objective_at(&self, x: &[S]) -> S {
        self.objective
            .iter()
            .zip(x)
            .map(|(c, v)| c.clone() * v.clone())
            .sum()
    }
}

/// An optimal solution: the exact optimum and the values of the original
/// (structural) variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution<S> {
    pub value: S,
    pub variables: Vec<S>,
}

/// Outcome of an exact solve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpSolveResult<S> {
    Optimal(LpSolution<S>),
    Infeasible,
    Unbounded,
}

impl<S> LpSolveResult<S> {
    pub fn status(&self) -> &'static str {
        match self {
            LpSolveResult::Optimal(_) => "optimal",
            LpSolveResult::Infeasible => "infeasible",
            LpSolveResult::Unbounded => "unbounded",
        }
    }

    pub fn optimal(&self) -> Option<&LpSolution<S>> {
        match self {
            LpSolveResult::Optimal(sol) => Some(sol),
            _ => None,
        }
    }

    /// The optimum, if one exists.
    pub fn optimal_value(&self) -> Option<&S> {
        self.optimal().map(|s| &s.value)
    }
}

/// Hard stop against runaway iteration. Bland's rule precludes cycling, so
/// hitting this indicates a bug; failing loudly beats hanging.
const MAX_PIVOTS: u64 = 1_000_000;

enum Phase {
    Optimal,
    Unbounded,
}

/// Dense simplex tableau kept in canonical form: basis columns are identity,
/// `z` holds reduced costs, `objective` the current objective value.
struct Tableau<S> {
    a: Vec<Vec<S>>,
    b: Vec<S>,
    basis: Vec<usize>,
    z: Vec<S>,
    objective: S,
}

impl<S: Scalar> Tableau<S> {
    fn num_cols(&self) -> usize {
        self.z.len()
    }

    /// Installs a new cost vector and restores canonical form
    /// (zero reduced cost on basic columns).
    fn set_cost(&mut self, cost: &[S]) {
        self.z = cost.to_vec();
        self.objective = S::zero();
        for (i, &bi) in self.basis.iter().enumerate() {
            let c = cost[bi].clone();
            if c.is_zero() {
                continue;
            }
            for j in 0..self.z.len() {
                if !self.a[i][j].is_zero() {
                    self.z[j] = self.z[j].clone() - c.clone() * self.a[i][j].clone();
                }
            }
            self.objective = self.objective.clone() + c * self.b[i].clone();
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        // Normalize the pivot row.
        let piv = self.a[row][col].clone();
        debug_assert!(!piv.is_zero());
        if !piv.is_one() {
            for j in 0..self.num_cols() {
                if !self.a[row][j].is_zero() {
                    self.a[row][j] = self.a[row][j].clone() / piv.clone();
                }
            }
            self.b[row] = self.b[row].clone() / piv;
        }
        // Eliminate the pivot column from every other row.
        for r in 0..self.a.len() {
            if r == row {
                continue;
            }
            let f = self.a[r][col].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..self.num_cols() {
                if !self.a[row][j].is_zero() {
                    self.a[r][j] = self.a[r][j].clone() - f.clone() * self.a[row][j].clone();
                }
            }
            self.b[r] = self.b[r].clone() - f * self.b[row].clone();
        }
        // And from the cost row, tracking the objective.
        let f = self.z[col].clone();
        if !f.is_zero() {
            for j in 0..self.num_cols() {
                if !self.a[row][j].is_zero() {
                    self.z[j] = self.z[j].clone() - f.clone() * self.a[row][j].clone();
                }
            }
            self.objective = self.objective.clone() + f * self.b[row].clone();
        }
        self.basis[row] = col;
    }

    /// Runs Bland-rule iterations until optimality or unboundedness.
    fn run(&mut self) -> Phase {
        let mut pivots: u64 = 0;
        loop {
            // Entering: lowest-index column with negative reduced cost.
            let Some(col) = (0..self.num_cols()).find(|&j| self.z[j] < S::zero()) else {
                return Phase::Optimal;
            };
            // Leaving: minimum ratio b/a over positive entries; ties go to
            // the row whose basic variable has the lowest index.
            let mut leaving: Option<(usize, S)> = None;
            for i in 0..self.a.len() {
                if self.a[i][col].partial_cmp(&S::zero()) != Some(Ordering::Greater) {
                    continue;
                }
                let ratio = self.b[i].clone() / self.a[i][col].clone();
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((best_i, best_ratio)) => {
                        if ratio < best_ratio
                            || (ratio == best_ratio && self.basis[i] < self.basis[best_i])
                        {
                            Some((i, ratio))
                        } else {
                            Some((best_i, best_ratio))
                        }
                    }
                };
            }
            let Some((row, _)) = leaving else {
                return Phase::Unbounded;
            };
            self.pivot(row, col);
            pivots += 1;
            assert!(pivots < MAX_PIVOTS, "simplex exceeded pivot safety bound");
        }
    }
}

/// Solves `lp` exactly: converts to standard form (slacks for `<=`, surplus
/// plus artificial for `>=`, artificial for `=`), runs phase 1 to find a
/// basic feasible point (or proves infeasibility), drives artificial
/// variables out of the basis (dropping redundant rows), then optimizes the
/// true objective in phase 2.
///
/// # Panics
///
/// Panics if a constraint's coefficient vector length disagrees with the
/// number of variables.
pub fn solve_exact<S: Scalar>(lp: &LinearProgram<S>) -> LpSolveResult<S> {
    let n = lp.num_variables();
    for c in &lp.constraints {
        assert_eq!(
            c.coeffs.len(),
            n,
            "constraint arity {} != variable count {n}",
            c.coeffs.len()
        );
    }

    // Normalize rows: rhs >= 0, and `>= 0` rows become `<= 0` rows so they
    // start feasible with a slack basis instead of needing an artificial.
    let mut rows: Vec<(Vec<S>, Relation, S)> = lp
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.relation, c.rhs.clone()))
        .collect();
    for (coeffs, relation, rhs) in &mut rows {
        if *rhs < S::zero() || (*relation == Relation::Ge && rhs.is_zero()) {
            for a in coeffs.iter_mut() {
                *a = -a.clone();
            }
            *rhs = -rhs.clone();
            *relation = match *relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let num_slacks = rows
        .iter()
        .filter(|(_, rel, _)| *rel != Relation::Eq)
        .count();
    let num_artificials = rows
        .iter()
        .filter(|(_, rel, _)| *rel != Relation::Le)
        .count();
    let slack_base = n;
    let artificial_base = n + num_slacks;
    let total = artificial_base + num_artificials;

    let mut a = vec![vec![S::zero(); total]; m];
    let mut b = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_slack = slack_base;
    let mut next_artificial = artificial_base;
    for (i, (coeffs, relation, rhs)) in rows.into_iter().enumerate() {
        for (j, v) in coeffs.into_iter().enumerate() {
            a[i][j] = v;
        }
        b.push(rhs);
        match relation {
            Relation::Le => {
                a[i][next_slack] = S::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                a[i][next_slack] = -S::one();
                next_slack += 1;
                a[i][next_artificial] = S::one();
                basis.push(next_artificial);
                next_artificial += 1;
            }
            Relation::Eq => {
                a[i][next_artificial] = S::one();
                basis.push(next_artificial);
                next_artificial += 1;
            }
        }
    }

    let mut tableau = Tableau {
        a,
        b,
        basis,
        z: vec![S::zero(); total],
        objective: S::zero(),
    };

    if num_artificials > 0 {
        // Phase 1: minimize the sum of artificials.
        let mut phase1_cost = vec![S::zero(); total];
        for c in phase1_cost.iter_mut().skip(artificial_base) {
            *c = S::one();
        }
        tableau.set_cost(&phase1_cost);
        match tableau.run() {
            Phase::Optimal => {}
            Phase::Unbounded => unreachable!("phase-1 objective is bounded below by zero"),
        }
        if tableau.objective > S::zero() {
            return LpSolveResult::Infeasible;
        }
        // Drive leftover (zero-valued) artificials out of the basis;
        // rows with no eligible pivot are redundant and dropped.
        let mut row = 0;
        while row < tableau.a.len() {
            if tableau.basis[row] < artificial_base {
                row += 1;
                continue;
            }
            match (0..artificial_base).find(|&j| !tableau.a[row][j].is_zero()) {
                Some(col) => {
                    tableau.pivot(row, col);
                    row += 1;
                }
                None => {
                    tableau.a.remove(row);
                    tableau.b.remove(row);
                    tableau.basis.remove(row);
                }
            }
        }
        // Artificial columns are trailing; truncate them away.
        for r in &mut tableau.a {
            r.truncate(artificial_base);
        }
        tableau.z.truncate(artificial_base);
    }

    // Phase 2: the real objective over structural + slack columns.
    let mut cost = vec![S::zero(); tableau.num_cols()];
    cost[..n].clone_from_slice(&lp.objective);
    tableau.set_cost(&cost);
    match tableau.run() {
        Phase::Unbounded => LpSolveResult::Unbounded,
        Phase::Optimal => {
            let mut x = vec![S::zero(); n];
            for (i, &bi) in tableau.basis.iter().enumerate() {
                if bi < n {
                    x[bi] = tableau.b[i].clone();
                }
            }
            let value = lp.objective_at(&x);
            debug_assert_eq!(value, tableau.objective);
            debug_assert!(lp.is_feasible_point(&x));
            LpSolveResult::Optimal(LpSolution {
                value,
                variables: x,
            })
        }
    }
}
