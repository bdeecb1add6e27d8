//! Worst-case efficiency bounds: linear programs, closed-form formulas, and
//! dual certificates.
//!
//! For a two-buyer auction with `T` items whose equilibrium path ends at
//! `(k, T-k)` while `(T, 0)` is the unique optimum with welfare normalized
//! to 1, the realized welfare is bounded below by the optimum of a linear
//! program over the incremental values: minimize the realized welfare
//! subject to the normalization, the "no endpoint beats the optimum"
//! welfare rows, and the valid-inequality family that every equilibrium
//! reaching `(k, T-k)` must satisfy (plus concavity rows for the concave
//! class). This module builds those programs ([`build_primal`]), solves
//! them exactly ([`lp_bound`]), evaluates the matching closed forms
//! ([`poa_bound_concave`], [`poa_bound_general`]), and constructs explicit
//! dual solutions ([`concave_dual_certificate`],
//! [`general_dual_certificate`]) whose feasibility — replayed row by row by
//! [`verify_dual`] — certifies the bounds without trusting the solver.
//!
//! The function [`ConcaveBoundTable::min_over_k`] minimizes the concave
//! bound over the endpoint split `k`; as `T` grows this minimum approaches
//! `1 - 1/e` from above, and [`one_minus_inv_e_bounds`] supplies exact
//! rational brackets of that constant for comparisons.

pub mod simplex;

use thiserror::Error;

pub use simplex::{solve_exact, Constraint, LinearProgram, LpSolution, LpSolveResult, Relation};

use crate::checks::{CheckReport, Witness};
use crate::scalar::Scalar;

/// Parameter errors for bound computations.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("number of items must be positive")]
    ZeroItems,
    #[error("endpoint split k = {k} exceeds the item count T = {items}")]
    KTooLarge { items: usize, k: usize },
}

fn check_params(items: usize, k: usize) -> Result<(), BoundError> {
    if items == 0 {
        return Err(BoundError::ZeroItems);
    }
    if k > items {
        return Err(BoundError::KTooLarge { items, k });
    }
    Ok(())
}

/// Builds the efficiency-bound program for endpoint `(k, T-k)`.
///
/// Variables are `v1(1..=T)` then `v2(1..=T)`, all implicitly nonnegative.
/// The objective is the welfare realized at `(k, T-k)`. Rows appear in this
/// order:
///
/// 1. normalization: `sum_j v1(j) = 1` (the optimal welfare);
/// 2. for each `l = 0..T-1`: welfare at endpoint `(l, T-l)` is at most 1;
/// 3. for each `ell = 0..T-k-1`: the valid inequality
///    `sum_{i=ell+1}^{T-k} (T-i+1) v2(i) - sum_{i=k+1}^{T-ell} (T-i-ell+1) v1(i) >= 0`;
/// 4. if `concave`, for each buyer in order and `j = 1..T-1`:
///    `v(j+1) - v(j) <= 0`.
pub fn build_primal<S: Scalar>(
    items: usize,
    k: usize,
    concave: bool,
) -> Result<LinearProgram<S>, BoundError> {
    check_params(items, k)?;
    let n = 2 * items;
    let v1 = |j: usize| j - 1;
    let v2 = |j: usize| items + j - 1;

    let mut variable_names = Vec::with_capacity(n);
    for j in 1..=items {
        variable_names.push(format!("v1({j})"));
    }
    for j in 1..=items {
        variable_names.push(format!("v2({j})"));
    }

    let mut objective = vec![S::zero(); n];
    for j in 1..=k {
        objective[v1(j)] = S::one();
    }
    for j in 1..=items - k {
        objective[v2(j)] = S::one();
    }

    let mut constraints = Vec::new();

    let mut normalization = vec![S::zero(); n];
    for j in 1..=items {
        normalization[v1(j)] = S::one();
    }
    constraints.push(Constraint {
        coeffs: normalization,
        relation: Relation::Eq,
        rhs: S::one(),
    });

    for l in 0..items {
        let mut coeffs = vec![S::zero(); n];
        for j in 1..=l {
            coeffs[v1(j)] = S::one();
        }
        for j in 1..=items - l {
            coeffs[v2(j)] = S::one();
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: S::one(),
        });
    }

    for ell in 0..items - k {
        let mut coeffs = vec![S::zero(); n];
        for i in ell + 1..=items - k {
            coeffs[v2(i)] = S::from_usize(items - i + 1);
        }
        for i in k + 1..=items - ell {
            coeffs[v1(i)] = -S::from_usize(items - i - ell + 1);
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Ge,
            rhs: S::zero(),
        });
    }

    if concave {
        for buyer in [&v1 as &dyn Fn(usize) -> usize, &v2] {
            for j in 1..items {
                let mut coeffs = vec![S::zero(); n];
                coeffs[buyer(j + 1)] = S::one();
                coeffs[buyer(j)] = -S::one();
                constraints.push(Constraint {
                    coeffs,
                    relation: Relation::Le,
                    rhs: S::zero(),
                });
            }
        }
    }

    Ok(LinearProgram {
        variable_names,
        objective,
        constraints,
    })
}

/// Builds and exactly solves the efficiency-bound program, returning its
/// optimum. The program is always feasible (a scaled worst-case instance
/// satisfies it) and bounded below by zero, so an optimum always exists.
pub fn lp_bound<S: Scalar>(items: usize, k: usize, concave: bool) -> Result<S, BoundError> {
    let lp = build_primal::<S>(items, k, concave)?;
    match solve_exact(&lp) {
        LpSolveResult::Optimal(sol) => Ok(sol.value),
        other => unreachable!(
            "efficiency-bound program is feasible and bounded, got {}",
            other.status()
        ),
    }
}

/// Closed-form worst-case efficiency of a concave-valuation equilibrium
/// ending at `(k, T-k)`: `(1/T) * (k + sum_{j=1}^{T-k} j/(k+j))`.
pub fn poa_bound_concave<S: Scalar>(items: usize, k: usize) -> Result<S, BoundError> {
    check_params(items, k)?;
    let mut sum = S::from_usize(k);
    for j in 1..=items - k {
        sum = sum + S::from_usize(j) / S::from_usize(k + j);
    }
    Ok(sum / S::from_usize(items))
}

/// Worst-case efficiency over all valuations (no concavity): `1/T`.
pub fn poa_bound_general<S: Scalar>(items: usize) -> Result<S, BoundError> {
    check_params(items, 0)?;
    Ok(S::one() / S::from_usize(items))
}

/// A dual solution for the efficiency-bound program at `(items, k)`.
///
/// Index conventions follow the primal rows: `sigma[l]` (for `l = 0..=T`)
/// pairs with the welfare row at endpoint `(l, T-l)` — `sigma[T]` with the
/// normalization equality, so it is sign-free while `sigma[l] <= 0`
/// otherwise; `mu[ell]` (for `ell = 0..T-k`) pairs with the valid
/// inequalities and must be nonnegative; `kappa1[j]`/`kappa2[j]` (for
/// `j = 1..T`) pair with the concavity rows and must be nonpositive, with
/// boundary entries `kappa[0] = kappa[T] = 0` fixed for convenience. For
/// the general (concavity-free) program the kappa variables do not exist
/// and must be identically zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualCertificate<S> {
    pub items: usize,
    pub k: usize,
    /// Length `items + 1`.
    pub sigma: Vec<S>,
    /// Length `items + 1`; first and last entries must be zero.
    pub kappa1: Vec<S>,
    /// Length `items + 1`; first and last entries must be zero.
    pub kappa2: Vec<S>,
    /// Length `items - k`.
    pub mu: Vec<S>,
}

/// `sum_{j=0}^{s-1} (s - j) / (items - j)`, the correction series used by
/// the concave certificate's kappa entries.
fn partial_ratio_sum<S: Scalar>(items: usize, s: usize) -> S {
    let mut total = S::zero();
    for j in 0..s {
        total = total + S::from_usize(s - j) / S::from_usize(items - j);
    }
    total
}

/// The explicit dual solution certifying the concave bound: it is feasible
/// and makes every main dual row tight, so its objective equals the
/// program's optimum.
///
/// Entries: `sigma[T]` is the closed-form bound itself; `mu[0] = 1/T` and
/// `mu[ell] = 1/(T-ell) - 1/(T-ell+1)`; `kappa1[i] = i (sigma[T] - 1)` up
/// to `i = k` and `-(T-i) sigma[T] + sum_{j=0}^{T-i-1} (T-i-j)/(T-j)`
/// beyond (the two branches agree where they overlap, which is asserted);
/// everything else is zero.
pub fn concave_dual_certificate<S: Scalar>(
    items: usize,
    k: usize,
) -> Result<DualCertificate<S>, BoundError> {
    check_params(items, k)?;
    let sigma_top: S = poa_bound_concave(items, k)?;

    let mut sigma = vec![S::zero(); items + 1];
    sigma[items] = sigma_top.clone();

    let mut mu = vec![S::zero(); items - k];
    if !mu.is_empty() {
        mu[0] = S::one() / S::from_usize(items);
        for (ell, m) in mu.iter_mut().enumerate().skip(1) {
            *m = S::one() / S::from_usize(items - ell) - S::one() / S::from_usize(items - ell + 1);
        }
    }

    let objective_branch = |i: usize| S::from_usize(i) * (sigma_top.clone() - S::one());
    let tail_branch = |i: usize| {
        partial_ratio_sum::<S>(items, items - i) - S::from_usize(items - i) * sigma_top.clone()
    };
    // The two branch formulas must agree where their ranges meet; this is
    // what makes the tight rows telescope.
    if k < items {
        assert!(
            objective_branch(k) == tail_branch(k),
            "kappa branches disagree at their overlap"
        );
    } else {
        assert!(
            objective_branch(items).is_zero(),
            "kappa formula violates the zero boundary"
        );
    }

    let kappa1: Vec<S> = (0..=items)
        .map(|i| {
            if i == 0 || i == items {
                S::zero()
            } else if i <= k {
                objective_branch(i)
            } else {
                tail_branch(i)
            }
        })
        .collect();
    let kappa2 = vec![S::zero(); items + 1];

    Ok(DualCertificate {
        items,
        k,
        sigma,
        kappa1,
        kappa2,
        mu,
    })
}

/// The explicit dual solution certifying the general bound `1/T`:
/// `sigma[T] = mu[0] = 1/T`, everything else zero. Feasible (not tight).
pub fn general_dual_certificate<S: Scalar>(
    items: usize,
    k: usize,
) -> Result<DualCertificate<S>, BoundError> {
    check_params(items, k)?;
    let inv_t = S::one() / S::from_usize(items);
    let mut sigma = vec![S::zero(); items + 1];
    sigma[items] = inv_t.clone();
    let mut mu = vec![S::zero(); items - k];
    if !mu.is_empty() {
        mu[0] = inv_t;
    }
    Ok(DualCertificate {
        items,
        k,
        sigma,
        kappa1: vec![S::zero(); items + 1],
        kappa2: vec![S::zero(); items + 1],
        mu,
    })
}

/// The dual objective `sigma[T] - sum_{l<T} sigma[l]`.
pub fn dual_objective<S: Scalar>(cert: &DualCertificate<S>) -> S {
    let spent: S = cert.sigma[..cert.items].iter().cloned().sum();
    cert.sigma[cert.items].clone() - spent
}

/// One evaluated main dual row: its name, left-hand side, and the bound it
/// must respect (`<=` for mere feasibility; `=` for a tight certificate).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualRowEval<S> {
    pub name: String,
    pub lhs: S,
    pub bound: S,
}

impl<S: Scalar> DualRowEval<S> {
    /// `bound - lhs`: nonnegative iff the row is feasible, zero iff tight.
    pub fn slack(&self) -> S {
        self.bound.clone() - self.lhs.clone()
    }
}

fn assert_certificate_shape<S>(cert: &DualCertificate<S>) {
    let items = cert.items;
    assert!(
        items >= 1 && cert.k <= items,
        "malformed certificate parameters"
    );
    assert_eq!(cert.sigma.len(), items + 1, "sigma must have T+1 entries");
    assert_eq!(cert.kappa1.len(), items + 1, "kappa1 must have T+1 entries");
    assert_eq!(cert.kappa2.len(), items + 1, "kappa2 must have T+1 entries");
    assert_eq!(cert.mu.len(), items - cert.k, "mu must have T-k entries");
}

/// Evaluates every main dual row of the efficiency-bound program at the
/// certificate, in declaration order.
///
/// The four row families are named after the primal variable whose column
/// they transpose: `v1_obj(i)` / `v2_obj(i)` for values that appear in the
/// primal objective (`i <= k` resp. `i <= T-k`, bound 1), `v1_rest(i)` /
/// `v2_rest(i)` for the remainder (bound 0).
pub fn dual_main_rows<S: Scalar>(cert: &DualCertificate<S>) -> Vec<DualRowEval<S>> {
    assert_certificate_shape(cert);
    let items = cert.items;
    let k = cert.k;

    // sum_{l=i}^{T} sigma[l]
    let upper_sigma = |i: usize| -> S { cert.sigma[i..=items].iter().cloned().sum() };
    // sum_{l=0}^{T-i} sigma[l]
    let lower_sigma = |i: usize| -> S { cert.sigma[..=items - i].iter().cloned().sum() };
    // sum_{ell=0}^{T-i} (T-i-ell+1) mu[ell]
    let mu_weighted = |i: usize| -> S {
        (0..=items - i)
            .map(|ell| S::from_usize(items - i - ell + 1) * cert.mu[ell].clone())
            .sum()
    };
    // sum_{ell=0}^{i-1} mu[ell]
    let mu_prefix = |i: usize| -> S { cert.mu[..i].iter().cloned().sum() };

    let mut rows = Vec::with_capacity(2 * items);
    for i in 1..=k {
        rows.push(DualRowEval {
            name: format!("v1_obj({i})"),
            lhs: upper_sigma(i) - cert.kappa1[i].clone() + cert.kappa1[i - 1].clone(),
            bound: S::one(),
        });
    }
    for i in k + 1..=items {
        rows.push(DualRowEval {
            name: format!("v1_rest({i})"),
            lhs: upper_sigma(i) - cert.kappa1[i].clone() + cert.kappa1[i - 1].clone()
                - mu_weighted(i),
            bound: S::zero(),
        });
    }
    for i in 1..=items - k {
        rows.push(DualRowEval {
            name: format!("v2_obj({i})"),
            lhs: lower_sigma(i) - cert.kappa2[i].clone()
                + cert.kappa2[i - 1].clone()
                + S::from_usize(items - i + 1) * mu_prefix(i),
            bound: S::one(),
        });
    }
    for i in items - k + 1..=items {
        rows.push(DualRowEval {
            name: format!("v2_rest({i})"),
            lhs: lower_sigma(i) - cert.kappa2[i].clone() + cert.kappa2[i - 1].clone(),
            bound: S::zero(),
        });
    }
    rows
}

/// Replays every dual row of the efficiency-bound program against a
/// candidate certificate.
///
/// The four main row families are named after the primal variable whose
/// column they transpose: `v1_obj(i)` / `v2_obj(i)` for values that appear
/// in the objective (`i <= k` resp. `i <= T-k`), `v1_rest(i)` / `v2_rest(i)`
/// for the others. Sign rows are checked too. In concave mode the main rows
/// must hold with *equality* (that is what makes the certificate's objective
/// equal the optimum rather than merely bound it); in general mode they only
/// need to hold as inequalities and the kappa entries must be absent (zero).
pub fn verify_dual<S: Scalar>(cert: &DualCertificate<S>, concave: bool) -> CheckReport<S> {
    assert_certificate_shape(cert);
    let items = cert.items;

    let mut witnesses = Vec::new();

    for (l, s) in cert.sigma.iter().enumerate().take(items) {
        if *s > S::zero() {
            witnesses.push(Witness {
                location: format!("sigma_sign({l}): must be <= 0"),
                expected: S::zero(),
                actual: s.clone(),
            });
        }
    }
    for (name, kappa) in [("kappa1", &cert.kappa1), ("kappa2", &cert.kappa2)] {
        if concave {
            for j in [0, items] {
                if !kappa[j].is_zero() {
                    witnesses.push(Witness {
                        location: format!("{name}_boundary({j}): must be 0"),
                        expected: S::zero(),
                        actual: kappa[j].clone(),
                    });
                }
            }
            for (j, v) in kappa.iter().enumerate().take(items).skip(1) {
                if *v > S::zero() {
                    witnesses.push(Witness {
                        location: format!("{name}_sign({j}): must be <= 0"),
                        expected: S::zero(),
                        actual: v.clone(),
                    });
                }
            }
        } else {
            for (j, v) in kappa.iter().enumerate() {
                if !v.is_zero() {
                    witnesses.push(Witness {
                        location: format!(
                            "{name}_zero({j}): no concavity rows in the general program"
                        ),
                        expected: S::zero(),
                        actual: v.clone(),
                    });
                }
            }
        }
    }
    for (ell, m) in cert.mu.iter().enumerate() {
        if *m < S::zero() {
            witnesses.push(Witness {
                location: format!("mu_sign({ell}): must be >= 0"),
                expected: S::zero(),
                actual: m.clone(),
            });
        }
    }

    for row in dual_main_rows(cert) {
        let violated = if concave {
            row.lhs != row.bound
        } else {
            row.lhs > row.bound
        };
        if violated {
            witnesses.push(Witness {
                location: row.name,
                expected: row.bound,
                actual: row.lhs,
            });
        }
    }

    CheckReport::from_witnesses(
        if concave {
            "dual_certificate_concave"
        } else {
            "dual_certificate_general"
        },
        witnesses,
    )
}

/// Precomputed harmonic numbers supporting fast exact evaluation of the
/// concave bound and its minimum over the endpoint split.
///
/// The closed form rewrites as `1 - (k/T) (H_T - H_k)` where `H_n` is the
/// `n`-th harmonic number, so one prefix table serves every `(T, k)` with
/// `T <= max_items`.
pub struct ConcaveBoundTable<S> {
    harmonic: Vec<S>,
}

impl<S: Scalar> ConcaveBoundTable<S> {
    pub fn new(max_items: usize) -> Self {
        let mut harmonic = Vec::with_capacity(max_items + 1);
        harmonic.push(S::zero());
        for n in 1..=max_items {
            let prev = harmonic[n - 1].clone();
            harmonic.push(prev + S::one() / S::from_usize(n));
        }
        ConcaveBoundTable { harmonic }
    }

    pub fn max_items(&self) -> usize {
        self.harmonic.len() - 1
    }

    /// The `n`-th harmonic number `H_n`.
    pub fn harmonic(&self, n: usize) -> &S {
        &self.harmonic[n]
    }

    /// Same value as [`poa_bound_concave`], via `1 - (k/T)(H_T - H_k)`.
    pub fn bound(&self, items: usize, k: usize) -> Result<S, BoundError> {
        check_params(items, k)?;
        assert!(
            items <= self.max_items(),
            "table built for T <= {}, asked for {items}",
            self.max_items()
        );
        let gap = self.harmonic[items].clone() - self.harmonic[k].clone();
        Ok(S::one() - S::from_usize(k) / S::from_usize(items) * gap)
    }

    /// Minimizes the bound over `k in 0..=T`, returning the exact minimum
    /// and the smallest minimizing `k`.
    ///
    /// The forward difference of the bound at `k` is `-(1/T) phi(k)` with
    /// `phi(k) = (H_T - H_{k+1}) - k/(k+1)`, and `phi` is strictly
    /// decreasing, so the bound strictly decreases while `phi > 0` and
    /// never decreases afterwards: the smallest argmin is the first
    /// `k <= T-1` with `phi(k) <= 0` (which exists since
    /// `phi(T-1) = -(T-1)/T <= 0`), found here by bisection.
    pub fn min_over_k(&self, items: usize) -> Result<(S, usize), BoundError> {
        check_params(items, 0)?;
        assert!(
            items <= self.max_items(),
            "table built for T <= {}, asked for {items}",
            self.max_items()
        );
        let phi_nonpositive = |k: usize| -> bool {
            let gap = self.harmonic[items].clone() - self.harmonic[k + 1].clone();
            let phi = gap - S::from_usize(k) / S::from_usize(k + 1);
            phi <= S::zero()
        };
        let mut lo = 0;
        let mut hi = items - 1;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if phi_nonpositive(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok((self.bound(items, lo)?, lo))
    }
}

/// Convenience wrapper: minimum of the concave bound over `k` for a single
/// `T`, with the smallest minimizing `k`.
pub fn poa_bound_concave_min<S: Scalar>(items: usize) -> Result<(S, usize), BoundError> {
    ConcaveBoundTable::new(items).min_over_k(items)
}

/// Exact rational brackets `(lower, upper)` with
/// `lower < 1 - 1/e < upper`, from the partial exponential series
/// `S = sum_{n=0}^{25} 1/n!` and the remainder bound `e - S < 1/(25! * 25)`.
/// The gap is below `10^{-25}`.
pub fn one_minus_inv_e_bounds<S: Scalar>() -> (S, S) {
    const TERMS: usize = 25;
    let mut factorial = S::one();
    let mut series = S::one();
    for n in 1..=TERMS {
        factorial = factorial * S::from_usize(n);
        series = series + S::one() / factorial.clone();
    }
    let overshoot = series.clone() + S::one() / (factorial * S::from_usize(TERMS));
    (
        S::one() - S::one() / series,
        S::one() - S::one() / overshoot,
    )
}
