//! Executable structural checks on solved equilibria.
//!
//! Equilibrium play in this game provably satisfies a collection of
//! structural facts: winning never hurts, prices decline along paths,
//! utilities and prices are nonnegative, forward utility never exceeds the
//! value still collectible, efficiency can only drop at steps that hand an
//! item against a unique extreme optimum, and every reachable endpoint
//! `(k, T-k)` forces a family of linear inequalities on the valuations.
//!
//! Every check returns a [`CheckReport`] with failure witnesses instead of
//! aborting, so batch fuzzing collects full violation inventories. On a
//! correct solver these checks can never fail — each one restates a proved
//! property — so any witness indicates an implementation bug.

use std::fmt;

use crate::auction::{AuctionInstance, Buyer, Node};
use crate::equilibrium::{EquilibriumSolution, Outcome, PathReport};
use crate::scalar::{max2, Scalar};

/// A single violation: where it happened, what was required, what was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness<S> {
    /// Human-readable location and relation, e.g.
    /// `"node (0, 1), buyer 1: utility must not drop when the opponent wins"`.
    pub location: String,
    pub expected: S,
    pub actual: S,
}

/// Outcome of one structural check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport<S> {
    pub check_name: &'static str,
    pub passed: bool,
    /// Non-empty exactly when the check failed.
    pub witnesses: Vec<Witness<S>>,
}

impl<S> CheckReport<S> {
    pub fn from_witnesses(check_name: &'static str, witnesses: Vec<Witness<S>>) -> Self {
        CheckReport {
            check_name,
            passed: witnesses.is_empty(),
            witnesses,
        }
    }
}

impl<S: Scalar> fmt::Display for CheckReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed {
            write!(f, "{}: pass", self.check_name)
        } else {
            write!(
                f,
                "{}: FAIL ({} witness(es))",
                self.check_name,
                self.witnesses.len()
            )?;
            for w in &self.witnesses {
                write!(
                    f,
                    "\n  {} [expected {}, actual {}]",
                    w.location, w.expected, w.actual
                )?;
            }
            Ok(())
        }
    }
}

fn report<S>(name: &'static str, witnesses: Vec<Witness<S>>) -> CheckReport<S> {
    CheckReport::from_witnesses(name, witnesses)
}

/// Recomputes the solver's defining recurrences at every decision node and
/// confirms the stored table satisfies them: bids from child utilities,
/// price = min bid, outcome labels, winner/loser utility updates, exact
/// tie invariance, and the two equivalent characterizations of winning
/// (`b_i >= b_-i` iff `v_i(x_i+1) + U(x+e_i) >= v_-i(x_-i+1) + U(x+e_-i)`
/// where `U = u1 + u2`) and of forward utility
/// (`u_i = max_j [v_j(x_j+1) + U(x+e_j)] - v_-i(x_-i+1) - u_-i(x+e_-i)`).
pub fn check_recurrences<S: Scalar>(sol: &EquilibriumSolution<S>) -> CheckReport<S> {
    let inst = sol.instance();
    let mut witnesses = Vec::new();
    for node in inst.decision_nodes() {
        let rec = sol.record(node);
        let auction = rec.auction();
        let c1 = node.child(Buyer::One);
        let c2 = node.child(Buyer::Two);
        let r1 = sol.record(c1);
        let r2 = sol.record(c2);
        let v1_next = inst.v1().value(node.x1 + 1);
        let v2_next = inst.v2().value(node.x2 + 1);

        let b1 = v1_next.clone() + r1.u1.clone() - r2.u1.clone();
        let b2 = v2_next.clone() + r2.u2.clone() - r1.u2.clone();
        if b1 != auction.b1 {
            witnesses.push(Witness {
                location: format!("node {node}: stored b1 disagrees with recurrence"),
                expected: b1.clone(),
                actual: auction.b1.clone(),
            });
        }
        if b2 != auction.b2 {
            witnesses.push(Witness {
                location: format!("node {node}: stored b2 disagrees with recurrence"),
                expected: b2.clone(),
                actual: auction.b2.clone(),
            });
        }

        let price = if b1 <= b2 { b1.clone() } else { b2.clone() };
        if price != auction.price {
            witnesses.push(Witness {
                location: format!("node {node}: price must be min(b1, b2)"),
                expected: price,
                actual: auction.price.clone(),
            });
        }

        let expected_outcome = if b1 > b2 {
            Outcome::Buyer1Wins
        } else if b1 < b2 {
            Outcome::Buyer2Wins
        } else {
            Outcome::Tie
        };
        if expected_outcome != auction.outcome {
            witnesses.push(Witness {
                location: format!(
                    "node {node}: outcome label {:?} disagrees with bid comparison {:?}",
                    auction.outcome, expected_outcome
                ),
                expected: b1.clone(),
                actual: b2.clone(),
            });
        }

        // Winner/loser utility updates; at a tie both resolutions must
        // reproduce the stored utilities exactly.
        let favor1 = (v1_next.clone() - b2.clone() + r1.u1.clone(), r1.u2.clone());
        let favor2 = (r2.u1.clone(), v2_next.clone() - b1.clone() + r2.u2.clone());
        let expected_utilities: &[(&(S, S), &str)] = match auction.outcome {
            Outcome::Buyer1Wins => &[(&favor1, "buyer-1-wins update")],
            Outcome::Buyer2Wins => &[(&favor2, "buyer-2-wins update")],
            Outcome::Tie => &[
                (&favor1, "tie resolved toward buyer 1"),
                (&favor2, "tie resolved toward buyer 2"),
            ],
        };
        for ((eu1, eu2), label) in expected_utilities {
            if *eu1 != rec.u1 {
                witnesses.push(Witness {
                    location: format!("node {node}: u1 disagrees with {label}"),
                    expected: eu1.clone(),
                    actual: rec.u1.clone(),
                });
            }
            if *eu2 != rec.u2 {
                witnesses.push(Witness {
                    location: format!("node {node}: u2 disagrees with {label}"),
                    expected: eu2.clone(),
                    actual: rec.u2.clone(),
                });
            }
        }

        // Winning characterized by total-surplus comparison.
        let total1 = v1_next.clone() + r1.u1.clone() + r1.u2.clone();
        let total2 = v2_next.clone() + r2.u1.clone() + r2.u2.clone();
        if (b1 >= b2) != (total1 >= total2) || (b2 >= b1) != (total2 >= total1) {
            witnesses.push(Witness {
                location: format!(
                    "node {node}: bid comparison must match total-surplus comparison \
                     (b1..b2 vs v+U at children)"
                ),
                expected: total1.clone(),
                actual: total2.clone(),
            });
        }

        // Forward utility as best-total minus opponent's outside terms.
        let best_total = max2(total1.clone(), total2.clone());
        let u1_closed = best_total.clone() - v2_next.clone() - r2.u2.clone();
        let u2_closed = best_total - v1_next.clone() - r1.u1.clone();
        if u1_closed != rec.u1 {
            witnesses.push(Witness {
                location: format!("node {node}: u1 closed form disagrees"),
                expected: u1_closed,
                actual: rec.u1.clone(),
            });
        }
        if u2_closed != rec.u2 {
            witnesses.push(Witness {
                location: format!("node {node}: u2 closed form disagrees"),
                expected: u2_closed,
                actual: rec.u2.clone(),
            });
        }
    }
    report("recurrences", witnesses)
}

/// Winning never hurts: at every decision node and for each buyer `i`,
/// `u_i(x) >= u_i(x+e_-i)` — losing the round leaves you no better off —
/// with strict inequality exactly when `i` wins with the strictly greater
/// bid.
pub fn check_no_free_win<S: Scalar>(sol: &EquilibriumSolution<S>) -> CheckReport<S> {
    let mut witnesses = Vec::new();
    for node in sol.instance().decision_nodes() {
        let rec = sol.record(node);
        let auction = rec.auction();
        for buyer in Buyer::BOTH {
            let here = rec.utility(buyer);
            let after_loss = sol.record(node.child(buyer.other())).utility(buyer);
            let strictly_outbids = auction.bid(buyer) > auction.bid(buyer.other());
            if here < after_loss {
                witnesses.push(Witness {
                    location: format!(
                        "node {node}, buyer {buyer}: utility must not rise when the opponent wins"
                    ),
                    expected: after_loss.clone(),
                    actual: here.clone(),
                });
            } else if strictly_outbids && here == after_loss {
                witnesses.push(Witness {
                    location: format!(
                        "node {node}, buyer {buyer}: strict outbid requires strict utility gain"
                    ),
                    expected: after_loss.clone(),
                    actual: here.clone(),
                });
            } else if !strictly_outbids && here > after_loss {
                witnesses.push(Witness {
                    location: format!(
                        "node {node}, buyer {buyer}: strict utility gain requires strict outbid"
                    ),
                    expected: after_loss.clone(),
                    actual: here.clone(),
                });
            }
        }
    }
    report("no_free_win", witnesses)
}

/// Prices never increase along equilibrium play: if buyer `i` wins (weakly)
/// at `x` and another round follows, `p(x) >= p(x+e_i)`, with equality
/// exactly when `i` also weakly wins at the *other* child `x+e_-i`
/// (i.e. `b_i(x+e_-i) >= b_-i(x+e_-i)`).
pub fn check_declining_prices<S: Scalar>(sol: &EquilibriumSolution<S>) -> CheckReport<S> {
    let items = sol.items();
    let mut witnesses = Vec::new();
    for node in sol.instance().decision_nodes() {
        if node.items_remaining(items) <= 1 {
            continue; // no follow-up round
        }
        let auction = sol.record(node).auction();
        for &winner in auction.outcome.winners() {
            let next = sol.record(node.child(winner)).auction();
            let other_child = sol.record(node.child(winner.other())).auction();
            let wins_other_child = other_child.bid(winner) >= other_child.bid(winner.other());
            if auction.price < next.price {
                witnesses.push(Witness {
                    location: format!(
                        "node {node}, winner {winner}: price must not increase at the next round"
                    ),
                    expected: next.price.clone(),
                    actual: auction.price.clone(),
                });
            } else if auction.price == next.price && !wins_other_child {
                witnesses.push(Witness {
                    location: format!(
                        "node {node}, winner {winner}: constant price requires winning \
                         the other child too"
                    ),
                    expected: other_child.bid(winner).clone(),
                    actual: other_child.bid(winner.other()).clone(),
                });
            } else if auction.price > next.price && wins_other_child {
                witnesses.push(Witness {
                    location: format!(
                        "node {node}, winner {winner}: winning the other child requires \
                         a constant price"
                    ),
                    expected: next.price.clone(),
                    actual: auction.price.clone(),
                });
            }
        }
    }
    report("declining_prices", witnesses)
}

/// All forward utilities and all clearing prices are nonnegative.
pub fn check_nonnegativity<S: Scalar>(sol: &EquilibriumSolution<S>) -> CheckReport<S> {
    let mut witnesses = Vec::new();
    for (node, rec) in sol.records() {
        for buyer in Buyer::BOTH {
            if *rec.utility(buyer) < S::zero() {
                witnesses.push(Witness {
                    location: format!("node {node}, buyer {buyer}: negative forward utility"),
                    expected: S::zero(),
                    actual: rec.utility(buyer).clone(),
                });
            }
        }
        if let Some(auction) = &rec.auction {
            if auction.price < S::zero() {
                witnesses.push(Witness {
                    location: format!("node {node}: negative clearing price"),
                    expected: S::zero(),
                    actual: auction.price.clone(),
                });
            }
        }
    }
    report("nonnegativity", witnesses)
}

/// Along an equilibrium path, a buyer's forward utility never exceeds the
/// total incremental value they still collect on the path:
/// `u_i(x) <= Σ_{j=x_i+1}^{e_i} v_i(j)` where `e_i` is the buyer's final
/// holding at the path endpoint (a winner pays at most zero in the limit,
/// never less).
pub fn check_utility_upper_bound<S: Scalar>(
    sol: &EquilibriumSolution<S>,
    path: &PathReport<S>,
) -> CheckReport<S> {
    let items = sol.items();
    let endpoint = path.endpoint.terminal_node(items);
    let mut witnesses = Vec::new();
    for &node in &path.nodes {
        for buyer in Buyer::BOTH {
            let bound = sol
                .instance()
                .valuation(buyer)
                .sum_range(node.holdings(buyer) + 1, endpoint.holdings(buyer));
            let utility = sol.record(node).utility(buyer);
            if *utility > bound {
                witnesses.push(Witness {
                    location: format!(
                        "path node {node}, buyer {buyer}: utility exceeds value \
                         collectible by the path end {endpoint}"
                    ),
                    expected: bound,
                    actual: utility.clone(),
                });
            }
        }
    }
    report("utility_upper_bound", witnesses)
}

/// The utility gap at a decision node equals the winner-side expression:
/// `u_i - u_-i = v_i(x_i+1) + u_i(x+e_i) - v_-i(x_-i+1) - u_-i(x+e_-i)`,
/// in both orientations.
pub fn check_utility_difference<S: Scalar>(sol: &EquilibriumSolution<S>) -> CheckReport<S> {
    let inst = sol.instance();
    let mut witnesses = Vec::new();
    for node in inst.decision_nodes() {
        let rec = sol.record(node);
        let r1 = sol.record(node.child(Buyer::One));
        let r2 = sol.record(node.child(Buyer::Two));
        let v1_next = inst.v1().value(node.x1 + 1);
        let v2_next = inst.v2().value(node.x2 + 1);

        let gap = rec.u1.clone() - rec.u2.clone();
        let rhs_1 = v1_next.clone() + r1.u1.clone() - v2_next.clone() - r2.u2.clone();
        if gap != rhs_1 {
            witnesses.push(Witness {
                location: format!("node {node}: u1 - u2 disagrees with child expression"),
                expected: rhs_1,
                actual: gap.clone(),
            });
        }
        let rhs_2 = v2_next + r2.u2.clone() - v1_next - r1.u1.clone();
        if -gap.clone() != rhs_2 {
            witnesses.push(Witness {
                location: format!("node {node}: u2 - u1 disagrees with child expression"),
                expected: rhs_2,
                actual: -gap,
            });
        }
    }
    report("utility_difference", witnesses)
}

/// Efficiency measured suffix-by-suffix along an equilibrium path can drop
/// only at an extreme step: if the suffix from `x` is strictly less
/// efficient than the suffix from the next node, then exactly one of
///
/// - the unique optimal split at `x` gives buyer 1 everything, yet buyer 2
///   took the step, or
/// - the unique optimal split at `x` gives buyer 2 everything, yet buyer 1
///   took the step.
pub fn check_subpath_efficiency<S: Scalar>(
    sol: &EquilibriumSolution<S>,
    path: &PathReport<S>,
) -> CheckReport<S> {
    let inst = sol.instance();
    let items = sol.items();
    let endpoint = path.endpoint;
    let mut witnesses = Vec::new();
    for window in path.nodes.windows(2) {
        let (here, next) = (window[0], window[1]);
        let eff_here = inst.efficiency(here, endpoint);
        let eff_next = inst.efficiency(next, endpoint);
        if eff_here >= eff_next {
            continue; // no drop at this step (walking toward the endpoint)
        }
        let (_, argmax) = inst.opt_welfare(here);
        let remaining = here.items_remaining(items);
        let step_to_buyer2 = next.x2 > here.x2;
        let case_all_to_buyer1 = argmax.len() == 1 && argmax.contains(&remaining) && step_to_buyer2;
        let case_all_to_buyer2 = argmax.len() == 1 && argmax.contains(&0) && !step_to_buyer2;
        if case_all_to_buyer1 == case_all_to_buyer2 {
            witnesses.push(Witness {
                location: format!(
                    "path step {here} -> {next}: efficiency drops but the step is not \
                     against a unique extreme optimum (argmax {argmax:?})"
                ),
                expected: eff_next,
                actual: eff_here,
            });
        }
    }
    report("subpath_efficiency", witnesses)
}

/// Both sides of the per-node endpoint inequality used by
/// [`check_utility_ray_bound`]: at node `x` with path endpoint `(k, T-k)`,
///
/// - left: `Σ_{j=0}^{t(x)} u2(x + j·e1)` — buyer 2's utilities along the
///   buyer-1 ray through `x` (read from the full lattice, also off-path),
/// - right: `Σ_{i=x2+1}^{T-k} [(T-x1-i+1)·v2(i) - Σ_{j=k+1}^{T-i+1} v1(j)]`.
pub fn utility_ray_sides<S: Scalar>(sol: &EquilibriumSolution<S>, node: Node, k: usize) -> (S, S) {
    let inst = sol.instance();
    let items = sol.items();
    let left: S = (0..=node.items_remaining(items))
        .map(|j| sol.record(Node::new(node.x1 + j, node.x2)).u2.clone())
        .sum();
    let right: S = (node.x2 + 1..=items.saturating_sub(k))
        .map(|i| {
            let weight = S::from_usize(items - node.x1 - i + 1);
            let v1_part = inst.v1().sum_range(k + 1, items - i + 1);
            weight * inst.v2().value(i) - v1_part
        })
        .sum();
    (left, right)
}

/// For every node `x` of an equilibrium path with endpoint `(k, T-k)`, the
/// summed buyer-2 utilities along the buyer-1 ray from `x` are bounded by a
/// valuation expression depending only on `(x, k)`:
/// `Σ_{j=0}^{t(x)} u2(x+j·e1) <= Σ_{i=x2+1}^{T-k} [(T-x1-i+1)·v2(i) -
/// Σ_{j=k+1}^{T-i+1} v1(j)]`.
pub fn check_utility_ray_bound<S: Scalar>(
    sol: &EquilibriumSolution<S>,
    path: &PathReport<S>,
) -> CheckReport<S> {
    let k = path.endpoint.buyer1_items;
    let mut witnesses = Vec::new();
    for &node in &path.nodes {
        if node.is_terminal(sol.items()) {
            continue;
        }
        let (left, right) = utility_ray_sides(sol, node, k);
        if left > right {
            witnesses.push(Witness {
                location: format!(
                    "path node {node}, endpoint ({k}, {}): buyer-2 ray utilities exceed \
                     the valuation bound",
                    sol.items() - k
                ),
                expected: right,
                actual: left,
            });
        }
    }
    report("utility_ray_bound", witnesses)
}

/// The two algebraically equivalent forms of the endpoint inequality for
/// `(T, k, ℓ)`: the nested form
/// `Σ_{i=ℓ+1}^{T-k} [(T-i+1)·v2(i) - Σ_{j=k+1}^{T-i+1} v1(j)]`
/// and the flattened form
/// `Σ_{i=ℓ+1}^{T-k} (T-i+1)·v2(i) - Σ_{i=k+1}^{T-ℓ} (T-i-ℓ+1)·v1(i)`.
pub fn valid_inequality_forms<S: Scalar>(
    inst: &AuctionInstance<S>,
    k: usize,
    ell: usize,
) -> (S, S) {
    let items = inst.items();
    let nested: S = (ell + 1..=items - k)
        .map(|i| {
            S::from_usize(items - i + 1) * inst.v2().value(i)
                - inst.v1().sum_range(k + 1, items - i + 1)
        })
        .sum();
    let v2_part: S = (ell + 1..=items - k)
        .map(|i| S::from_usize(items - i + 1) * inst.v2().value(i))
        .sum();
    let v1_part: S = (k + 1..=items - ell)
        .map(|i| S::from_usize(items - i - ell + 1) * inst.v1().value(i))
        .sum();
    (nested, v2_part - v1_part)
}

/// If some equilibrium endpoint of the instance is `(k, T-k)` then for every
/// `0 <= ℓ < T-k` the valuations satisfy
/// `Σ_{i=ℓ+1}^{T-k} (T-i+1)·v2(i) - Σ_{i=k+1}^{T-ℓ} (T-i-ℓ+1)·v1(i) >= 0`.
/// Also confirms, ℓ by ℓ, that this flattened form agrees exactly with its
/// nested derivation (a pure algebraic identity).
///
/// The caller is responsible for the endpoint premise; pass a `k` returned
/// by endpoint enumeration.
pub fn check_valid_inequalities<S: Scalar>(inst: &AuctionInstance<S>, k: usize) -> CheckReport<S> {
    let items = inst.items();
    assert!(k <= items, "endpoint k={k} exceeds item count {items}");
    let mut witnesses = Vec::new();
    for ell in 0..items.saturating_sub(k) {
        let (nested, flat) = valid_inequality_forms(inst, k, ell);
        if nested != flat {
            witnesses.push(Witness {
                location: format!("endpoint k={k}, l={ell}: nested and flattened forms disagree"),
                expected: nested.clone(),
                actual: flat.clone(),
            });
        }
        if flat < S::zero() {
            witnesses.push(Witness {
                location: format!("endpoint k={k}, l={ell}: inequality violated"),
                expected: S::zero(),
                actual: flat,
            });
        }
    }
    report("valid_inequalities", witnesses)
}

/// Runs every check against a solved instance: the node-level checks once,
/// and the path-dependent checks along one witness path per reachable
/// equilibrium endpoint (plus the endpoint inequalities for each endpoint).
/// Returns one aggregated report per check.
pub fn run_all_checks<S: Scalar>(sol: &EquilibriumSolution<S>) -> Vec<CheckReport<S>> {
    let mut reports = vec![
        check_recurrences(sol),
        check_no_free_win(sol),
        check_declining_prices(sol),
        check_nonnegativity(sol),
        check_utility_difference(sol),
    ];
    let mut upper = Vec::new();
    let mut subpath = Vec::new();
    let mut ray = Vec::new();
    let mut valid = Vec::new();
    for endpoint in sol.reachable_equilibrium_endpoints(Node::ROOT) {
        let path = sol
            .witness_path(Node::ROOT, endpoint)
            .expect("every reachable endpoint has a witness path");
        upper.extend(check_utility_upper_bound(sol, &path).witnesses);
        subpath.extend(check_subpath_efficiency(sol, &path).witnesses);
        ray.extend(check_utility_ray_bound(sol, &path).witnesses);
        valid.extend(check_valid_inequalities(sol.instance(), endpoint.buyer1_items).witnesses);
    }
    reports.push(report("utility_upper_bound", upper));
    reports.push(report("subpath_efficiency", subpath));
    reports.push(report("utility_ray_bound", ray));
    reports.push(report("valid_inequalities", valid));
    reports
}

/// Convenience for tests and the `verify` subcommand: true when every
/// aggregated check passes.
pub fn all_checks_pass<S: Scalar>(sol: &EquilibriumSolution<S>) -> bool {
    run_all_checks(sol).iter().all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{solve, TiePolicy};
    use crate::instances::{example_1, tight_concave, tight_general};
    use crate::Rat;

    fn int(n: i64) -> Rat {
        Rat::from_int(n)
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::from_ratio(n, d)
    }

    #[test]
    fn worked_example_passes_all_checks() {
        let sol = solve(example_1::<Rat>()).unwrap();
        for r in run_all_checks(&sol) {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn no_free_win_strictness_on_worked_example() {
        let sol = solve(example_1::<Rat>()).unwrap();
        // At (0, 1) buyer 1 strictly outbids (10 > 0) and strictly gains:
        // u1(0,1) = 10 > u1(0,2) = 0. At the root tie, equality holds for
        // both buyers. The check encodes exactly this; it must pass.
        assert!(check_no_free_win(&sol).passed);
        let rec = sol.record(Node::new(0, 1));
        assert_eq!(rec.u1, int(10));
        assert_eq!(sol.record(Node::new(0, 2)).u1, int(0));
        let root = sol.record(Node::ROOT);
        assert_eq!(root.u1, sol.record(Node::new(0, 1)).u1);
        assert_eq!(root.u2, sol.record(Node::new(1, 0)).u2);
    }

    #[test]
    fn declining_prices_on_worked_example_paths() {
        let sol = solve(example_1::<Rat>()).unwrap();
        assert!(check_declining_prices(&sol).passed);
        let p2 = sol.extract_path(Node::ROOT, TiePolicy::FavorBuyer2);
        assert_eq!(p2.prices_paid, vec![int(5), int(0)]);
        let p1 = sol.extract_path(Node::ROOT, TiePolicy::FavorBuyer1);
        assert_eq!(p1.prices_paid, vec![int(5), int(5)]);
    }

    #[test]
    fn constant_prices_for_identical_constant_buyers() {
        let sol = solve(crate::AuctionInstance::new(
            3,
            vec![int(1), int(1), int(1)],
            vec![int(1), int(1), int(1)],
        ))
        .unwrap();
        assert!(check_declining_prices(&sol).passed);
        let path = sol.extract_path(Node::ROOT, TiePolicy::Alternate);
        let first = path.prices_paid[0].clone();
        assert!(path.prices_paid.iter().all(|p| *p == first));
    }

    #[test]
    fn utility_difference_identity_on_worked_example() {
        let sol = solve(example_1::<Rat>()).unwrap();
        assert!(check_utility_difference(&sol).passed);
        // Root instantiation: 10 - 0 = 10 + 5 - 5 - 0.
        let root = sol.record(Node::ROOT);
        assert_eq!(root.u1.clone() - root.u2.clone(), int(10));
    }

    #[test]
    fn utility_upper_bound_on_both_example_paths() {
        let sol = solve(example_1::<Rat>()).unwrap();
        for policy in TiePolicy::ALL {
            let path = sol.extract_path(Node::ROOT, policy);
            assert!(check_utility_upper_bound(&sol, &path).passed);
        }
    }

    #[test]
    fn ray_bound_base_cases_hold_with_equality() {
        // At t(x) = 1 the bound holds with equality on the path. The
        // penultimate node of an equilibrium path to (k, T-k) is either
        // (k-1, T-k) — final item to buyer 1, both sides 0 — or
        // (k, T-k-1) — final item to buyer 2, both sides v2(T-k) - v1(k+1).
        let sol = solve(tight_concave::<Rat>(4, 2).unwrap()).unwrap();
        let items = 4;
        let endpoints = sol.reachable_equilibrium_endpoints(Node::ROOT);
        assert!(!endpoints.is_empty());
        for endpoint in endpoints {
            let k = endpoint.buyer1_items;
            let path = sol.witness_path(Node::ROOT, endpoint).unwrap();
            let x = path.nodes[path.nodes.len() - 2];
            // This extremal family hands the final item to buyer 1.
            assert_eq!(x, Node::new(k - 1, items - k));
            let (l, r) = utility_ray_sides(&sol, x, k);
            assert_eq!(l, int(0), "endpoint k={k}");
            assert_eq!(r, int(0), "endpoint k={k}");
        }

        // Final item to buyer 2, nonzero sides: a dominant buyer 2 takes
        // both items, so from (0, 1) with endpoint (0, 2) both sides are
        // v2(2) - v1(1) = 1.
        let inst = AuctionInstance::<Rat>::new(2, vec![int(1), int(1)], vec![int(2), int(2)]);
        let sol = solve(inst).unwrap();
        let endpoints = sol.reachable_equilibrium_endpoints(Node::ROOT);
        assert!(endpoints.contains(&crate::Allocation::new(0)));
        let (l, r) = utility_ray_sides(&sol, Node::new(0, 1), 0);
        assert_eq!(l, int(1));
        assert_eq!(r, int(1));
    }

    #[test]
    fn subpath_efficiency_on_tight_concave_paths() {
        // The buyer-2-favoring path of the extremal concave instance drops
        // efficiency only via case (a): unique optimum gives everything to
        // buyer 1 while buyer 2 steps.
        let sol = solve(tight_concave::<Rat>(5, 2).unwrap()).unwrap();
        let path = sol.extract_path(Node::ROOT, TiePolicy::FavorBuyer2);
        assert!(check_subpath_efficiency(&sol, &path).passed);
        // The check is not vacuous here: efficiency strictly drops somewhere.
        let inst = sol.instance();
        let drops = path
            .nodes
            .windows(2)
            .filter(|w| inst.efficiency(w[0], path.endpoint) < inst.efficiency(w[1], path.endpoint))
            .count();
        assert!(drops > 0);
    }

    #[test]
    fn valid_inequalities_on_tight_general() {
        // T=2, k=1, l=0: 2·(1/2) - 1·1 = 0, boundary case of the inequality.
        let inst = tight_general::<Rat>(2).unwrap();
        let (nested, flat) = valid_inequality_forms(&inst, 1, 0);
        assert_eq!(flat, int(0));
        assert_eq!(nested, int(0));
        assert!(check_valid_inequalities(&inst, 1).passed);
    }

    #[test]
    fn valid_inequalities_k_extremes() {
        // k = T-1 on the extremal concave instance.
        let inst = tight_concave::<Rat>(5, 4).unwrap();
        assert!(check_valid_inequalities(&inst, 4).passed);
        // v2 ≡ 0 and endpoint (T, 0): range empty, vacuous pass.
        let solo = crate::AuctionInstance::new(2, vec![int(2), int(1)], vec![int(0), int(0)]);
        let r = check_valid_inequalities(&solo, 2);
        assert!(r.passed);
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn nested_and_flat_forms_agree_everywhere() {
        // Pure algebraic identity: check on a lopsided non-equilibrium
        // valuation for every (k, l) pair, independent of reachability.
        let inst = crate::AuctionInstance::new(
            5,
            vec![int(9), rat(7, 2), int(3), rat(1, 3), int(0)],
            vec![rat(11, 4), rat(5, 2), int(2), int(1), rat(1, 6)],
        );
        for k in 0..=5usize {
            for ell in 0..5 - k {
                let (nested, flat) = valid_inequality_forms(&inst, k, ell);
                assert_eq!(nested, flat, "k={k} l={ell}");
            }
        }
    }

    #[test]
    fn tight_concave_instances_pass_everything() {
        for (items, k) in [(2usize, 1usize), (3, 1), (4, 0), (5, 3), (6, 2)] {
            let sol = solve(tight_concave::<Rat>(items, k).unwrap()).unwrap();
            for r in run_all_checks(&sol) {
                assert!(r.passed, "T={items} k={k}: {r}");
            }
        }
    }

    #[test]
    fn tight_general_instances_pass_everything() {
        for items in 1..=8usize {
            let sol = solve(tight_general::<Rat>(items).unwrap()).unwrap();
            for r in run_all_checks(&sol) {
                assert!(r.passed, "T={items}: {r}");
            }
        }
    }

    #[test]
    fn tampered_utilities_are_caught() {
        // Corrupting a single utility must trip the recurrence audit.
        let sol = solve(example_1::<Rat>())
            .unwrap()
            .tampered(Node::new(1, 0), |rec| rec.u1 += int(1));
        let r = check_recurrences(&sol);
        assert!(!r.passed);
        assert!(!r.witnesses.is_empty());
    }

    #[test]
    fn tampered_price_is_caught() {
        let sol = solve(example_1::<Rat>())
            .unwrap()
            .tampered(Node::ROOT, |rec| {
                rec.auction.as_mut().unwrap().price = int(-1);
            });
        assert!(!check_recurrences(&sol).passed);
        assert!(!check_nonnegativity(&sol).passed);
    }

    #[test]
    fn negative_utility_is_caught() {
        let sol = solve(example_1::<Rat>())
            .unwrap()
            .tampered(Node::new(0, 1), |rec| rec.u2 = int(-3));
        let r = check_nonnegativity(&sol);
        assert!(!r.passed);
        assert_eq!(r.witnesses.len(), 1);
        assert_eq!(r.witnesses[0].actual, int(-3));
    }
}
