//! Backward-induction equilibrium solver.
//!
//! At a decision node `x`, each buyer bids their marginal gain from winning
//! rather than losing the current round:
//!
//! ```text
//! b1(x) = v1(x1+1) + u1(x+e1) - u1(x+e2)
//! b2(x) = v2(x2+1) + u2(x+e2) - u2(x+e1)
//! ```
//!
//! The higher bidder wins and pays the lower bid (second price); the winner's
//! forward utility gains `value - price` plus their utility at the winning
//! child, while the loser carries over their utility at that same child:
//!
//! ```text
//! b1 > b2:  u1(x) = v1(x1+1) - b2 + u1(x+e1),   u2(x) = u2(x+e1)
//! b1 < b2:  u1(x) = u1(x+e2),                   u2(x) = v2(x2+1) - b1 + u2(x+e2)
//! ```
//!
//! On an exact tie the two formulas provably agree for *both* buyers, so the
//! utilities are well defined regardless of how the tie is broken; the solver
//! computes both and insists on exact agreement. Terminal nodes have zero
//! forward utility. Processing levels `x1+x2 = T-1` down to `0` yields the
//! unique subgame-perfect utilities, bids, and prices at every node.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::auction::{
    level_nodes, Allocation, AuctionInstance, Buyer, Node, NodeTable, ValidationReport,
};
use crate::scalar::Scalar;

/// Who wins the current round: a strict winner or an exact bid tie.
///
/// Ties get an explicit label (rather than an arbitrary winner) because the
/// strictness/equality side conditions of the structural checks hinge on
/// exact ties, and because tie nodes branch the set of equilibrium paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Buyer1Wins,
    Buyer2Wins,
    Tie,
}

impl Outcome {
    /// The winners consistent with this outcome (both buyers at a tie).
    pub fn winners(self) -> &'static [Buyer] {
        match self {
            Outcome::Buyer1Wins => &[Buyer::One],
            Outcome::Buyer2Wins => &[Buyer::Two],
            Outcome::Tie => &[Buyer::One, Buyer::Two],
        }
    }

    /// True if `buyer` wins at least weakly (strict win or tie).
    pub fn wins_weakly(self, buyer: Buyer) -> bool {
        self.winners().contains(&buyer)
    }
}

/// The round auction at a decision node: both bids, the clearing price
/// (the minimum of the bids), and the outcome label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeAuction<S> {
    pub b1: S,
    pub b2: S,
    pub price: S,
    pub outcome: Outcome,
}

impl<S: Scalar> NodeAuction<S> {
    pub fn bid(&self, buyer: Buyer) -> &S {
        match buyer {
            Buyer::One => &self.b1,
            Buyer::Two => &self.b2,
        }
    }
}

/// Solver output at one node: forward utilities for both buyers, plus the
/// round auction (absent at terminal nodes, where utilities are zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeRecord<S> {
    pub u1: S,
    pub u2: S,
    pub auction: Option<NodeAuction<S>>,
}

impl<S: Scalar> NodeRecord<S> {
    pub fn utility(&self, buyer: Buyer) -> &S {
        match buyer {
            Buyer::One => &self.u1,
            Buyer::Two => &self.u2,
        }
    }

    /// The round auction; panics at terminal nodes.
    pub fn auction(&self) -> &NodeAuction<S> {
        self.auction
            .as_ref()
            .expect("terminal node has no round auction")
    }
}

/// Deterministic tie-breaking rule for extracting a single path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TiePolicy {
    /// Every tie goes to buyer 1.
    FavorBuyer1,
    /// Every tie goes to buyer 2.
    FavorBuyer2,
    /// Ties alternate, starting with buyer 1.
    Alternate,
}

impl TiePolicy {
    pub const ALL: [TiePolicy; 3] = [
        TiePolicy::FavorBuyer1,
        TiePolicy::FavorBuyer2,
        TiePolicy::Alternate,
    ];

    /// Stable identifier used in CLI arguments and reports.
    pub fn name(self) -> &'static str {
        match self {
            TiePolicy::FavorBuyer1 => "favor-buyer1",
            TiePolicy::FavorBuyer2 => "favor-buyer2",
            TiePolicy::Alternate => "alternate",
        }
    }
}

/// One equilibrium path: its nodes from start to a terminal node, the
/// realized endpoint, per-step prices, and its efficiency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathReport<S> {
    /// Consecutive nodes differing by one winner step; first is the start,
    /// last is terminal.
    pub nodes: Vec<Node>,
    pub endpoint: Allocation,
    /// Price paid at each step; `prices_paid.len() == nodes.len() - 1`.
    pub prices_paid: Vec<S>,
    /// Welfare achieved from the start node divided by the optimum there
    /// (1 if the optimum is 0).
    pub efficiency: S,
}

impl<S: Scalar> PathReport<S> {
    pub fn start(&self) -> Node {
        *self.nodes.first().expect("path has at least one node")
    }

    /// The winner of each step along the path.
    pub fn steps(&self) -> impl Iterator<Item = (Node, Buyer)> + '_ {
        self.nodes.windows(2).map(|w| {
            let winner = if w[1].x1 > w[0].x1 {
                Buyer::One
            } else {
                Buyer::Two
            };
            (w[0], winner)
        })
    }
}

/// Why [`solve`] refused or failed.
#[derive(Clone, Debug, Error)]
pub enum SolveError<S: Scalar> {
    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationReport),
    /// Tied bids produced different utilities under the two tie resolutions.
    /// Mathematically impossible for exact scalars; indicates either an
    /// arithmetic bug or a lossy scalar type (floats).
    #[error(
        "tie at {node} is not resolution-invariant: \
         buyer-1-wins gives (u1, u2) = ({}, {}), buyer-2-wins gives ({}, {})",
        favor1.0, favor1.1, favor2.0, favor2.1
    )]
    TieInvariance {
        node: Node,
        favor1: (S, S),
        favor2: (S, S),
    },
}

/// Complete equilibrium of an instance: a record for every lattice node.
#[derive(Clone, Debug)]
pub struct EquilibriumSolution<S> {
    instance: AuctionInstance<S>,
    records: NodeTable<NodeRecord<S>>,
}

/// Solves the game by backward induction on `x1 + x2`.
///
/// Validates the instance first. At every exact bid tie, utilities are
/// computed under both resolutions and must agree exactly; disagreement
/// (possible only through arithmetic error or float roundoff) is reported as
/// [`SolveError::TieInvariance`].
pub fn solve<S: Scalar>(
    instance: AuctionInstance<S>,
) -> Result<EquilibriumSolution<S>, SolveError<S>> {
    let report = instance.validate();
    if !report.is_valid() {
        return Err(SolveError::InvalidInstance(report));
    }

    let items = instance.items();
    let zero_record = || NodeRecord {
        u1: S::zero(),
        u2: S::zero(),
        auction: None,
    };
    // Terminal level is all zeros; fill everything and overwrite decision
    // nodes level by level, deepest first.
    let mut records: NodeTable<NodeRecord<S>> = NodeTable::from_fn(items, |_| zero_record());

    for level in (0..items).rev() {
        for node in level_nodes(items, level) {
            let c1 = node.child(Buyer::One);
            let c2 = node.child(Buyer::Two);
            let (u1_c1, u2_c1) = {
                let r = &records[c1];
                (r.u1.clone(), r.u2.clone())
            };
            let (u1_c2, u2_c2) = {
                let r = &records[c2];
                (r.u1.clone(), r.u2.clone())
            };
            let v1_next = instance.v1().value(node.x1 + 1);
            let v2_next = instance.v2().value(node.x2 + 1);

            let b1 = v1_next.clone() + u1_c1.clone() - u1_c2.clone();
            let b2 = v2_next.clone() + u2_c2.clone() - u2_c1.clone();

            let outcome = if b1 > b2 {
                Outcome::Buyer1Wins
            } else if b1 < b2 {
                Outcome::Buyer2Wins
            } else if b1 == b2 {
                Outcome::Tie
            } else {
                panic!("incomparable bids at {node} (NaN scalar?)");
            };
            let price = if b1 <= b2 { b1.clone() } else { b2.clone() };

            let buyer1_wins_utilities =
                || (v1_next.clone() - b2.clone() + u1_c1.clone(), u2_c1.clone());
            let buyer2_wins_utilities =
                || (u1_c2.clone(), v2_next.clone() - b1.clone() + u2_c2.clone());
            let (u1, u2) = match outcome {
                Outcome::Buyer1Wins => buyer1_wins_utilities(),
                Outcome::Buyer2Wins => buyer2_wins_utilities(),
                Outcome::Tie => {
                    let favor1 = buyer1_wins_utilities();
                    let favor2 = buyer2_wins_utilities();
                    if favor1 != favor2 {
                        return Err(SolveError::TieInvariance {
                            node,
                            favor1,
                            favor2,
                        });
                    }
                    favor1
                }
            };

            records[node] = NodeRecord {
                u1,
                u2,
                auction: Some(NodeAuction {
                    b1,
                    b2,
                    price,
                    outcome,
                }),
            };
        }
    }

    Ok(EquilibriumSolution { instance, records })
}

impl<S: Scalar> EquilibriumSolution<S> {
    pub fn instance(&self) -> &AuctionInstance<S> {
        &self.instance
    }

    pub fn items(&self) -> usize {
        self.instance.items()
    }

    pub fn record(&self, node: Node) -> &NodeRecord<S> {
        &self.records[node]
    }

    /// All `(node, record)` pairs in row-major order.
    pub fn records(&self) -> impl Iterator<Item = (Node, &NodeRecord<S>)> {
        self.records.iter()
    }

    /// All terminal allocations reachable from `from` by equilibrium play:
    /// strict winners must be followed, ties may break either way.
    ///
    /// The endpoint set (at most `T+1` elements) is enumerated instead of
    /// the path set, which can be exponentially large on tie-heavy
    /// instances; efficiency depends only on the endpoint.
    pub fn reachable_equilibrium_endpoints(&self, from: Node) -> BTreeSet<Allocation> {
        let items = self.items();
        let mut endpoints = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(node) = stack.pop() {
            if !seen.insert(node) {
                continue;
            }
            if node.is_terminal(items) {
                endpoints.insert(Allocation::new(node.x1));
                continue;
            }
            for &winner in self.records[node].auction().outcome.winners() {
                stack.push(node.child(winner));
            }
        }
        endpoints
    }

    /// The unique path from `from` under a deterministic tie policy.
    pub fn extract_path(&self, from: Node, policy: TiePolicy) -> PathReport<S> {
        let items = self.items();
        let mut nodes = vec![from];
        let mut prices_paid = Vec::new();
        let mut favor1 = !matches!(policy, TiePolicy::FavorBuyer2);
        let mut current = from;
        while !current.is_terminal(items) {
            let auction = self.records[current].auction();
            let winner = match auction.outcome {
                Outcome::Buyer1Wins => Buyer::One,
                Outcome::Buyer2Wins => Buyer::Two,
                Outcome::Tie => {
                    let choice = if favor1 { Buyer::One } else { Buyer::Two };
                    if policy == TiePolicy::Alternate {
                        favor1 = !favor1;
                    }
                    choice
                }
            };
            prices_paid.push(auction.price.clone());
            current = current.child(winner);
            nodes.push(current);
        }
        let endpoint = Allocation::new(current.x1);
        PathReport {
            efficiency: self.instance.efficiency(from, endpoint),
            nodes,
            endpoint,
            prices_paid,
        }
    }

    /// A single equilibrium path from `from` realizing `endpoint`, if one
    /// exists; demonstrates that the endpoint is genuinely reachable.
    pub fn witness_path(&self, from: Node, endpoint: Allocation) -> Option<PathReport<S>> {
        let items = self.items();
        let target = endpoint.terminal_node(items);
        if target.x1 < from.x1 || target.x2 < from.x2 {
            return None;
        }
        // reaches[n] = can equilibrium play starting at n end at `target`?
        // Filled terminal level upward, like the solver.
        let mut reaches: NodeTable<bool> = NodeTable::from_fn(items, |n| n == target);
        for level in (from.level()..items).rev() {
            for node in level_nodes(items, level) {
                let ok = self.records[node]
                    .auction()
                    .outcome
                    .winners()
                    .iter()
                    .any(|&w| reaches[node.child(w)]);
                reaches[node] = ok;
            }
        }
        if !reaches[from] {
            return None;
        }
        let mut nodes = vec![from];
        let mut prices_paid = Vec::new();
        let mut current = from;
        while !current.is_terminal(items) {
            let auction = self.records[current].auction();
            let winner = *auction
                .outcome
                .winners()
                .iter()
                .find(|&&w| reaches[current.child(w)])
                .expect("reachable node has a reachable child");
            prices_paid.push(auction.price.clone());
            current = current.child(winner);
            nodes.push(current);
        }
        debug_assert_eq!(current, target);
        Some(PathReport {
            efficiency: self.instance.efficiency(from, endpoint),
            nodes,
            endpoint,
            prices_paid,
        })
    }

    /// Test-only: returns a copy with one node record modified, for
    /// exercising the failure paths of the structural checks.
    #[cfg(test)]
    pub(crate) fn tampered(mut self, node: Node, f: impl FnOnce(&mut NodeRecord<S>)) -> Self {
        f(&mut self.records[node]);
        self
    }

    /// Worst efficiency over all equilibrium endpoints from the root — the
    /// instance's price of anarchy over equilibrium tie-breakings.
    pub fn min_equilibrium_efficiency(&self) -> S {
        self.reachable_equilibrium_endpoints(Node::ROOT)
            .into_iter()
            .map(|endpoint| self.instance.efficiency(Node::ROOT, endpoint))
            .reduce(|a, b| if b < a { b } else { a })
            .expect("at least one endpoint")
    }
}
