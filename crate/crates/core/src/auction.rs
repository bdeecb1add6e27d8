//! Domain model: buyers, the allocation lattice, valuations, auction
//! instances, and welfare/efficiency arithmetic.
//!
//! The game: `items` identical objects are sold one per round to two buyers
//! via second-price auctions. A state is a lattice node `(x1, x2)` recording
//! how many items each buyer holds; the node is terminal once all items are
//! sold. Buyer `i`'s preferences are given by incremental values `v_i(1..=T)`
//! where `v_i(k)` is the marginal value of acquiring a k-th item.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Scalar;

/// One of the two buyers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Buyer {
    One,
    Two,
}

impl Buyer {
    /// Both buyers, in index order.
    pub const BOTH: [Buyer; 2] = [Buyer::One, Buyer::Two];

    /// The opponent.
    pub fn other(self) -> Buyer {
        match self {
            Buyer::One => Buyer::Two,
            Buyer::Two => Buyer::One,
        }
    }

    /// 1-based index, for display and wire formats.
    pub fn index(self) -> usize {
        match self {
            Buyer::One => 1,
            Buyer::Two => 2,
        }
    }
}

impl fmt::Display for Buyer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// A lattice point `(x1, x2)`: buyer 1 holds `x1` items, buyer 2 holds `x2`.
///
/// Valid nodes of a `T`-item game satisfy `x1 + x2 <= T`; the node is
/// *terminal* when equality holds and a *decision node* otherwise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node {
    pub x1: usize,
    pub x2: usize,
}

impl Node {
    /// The initial state `(0, 0)`.
    pub const ROOT: Node = Node { x1: 0, x2: 0 };

    pub fn new(x1: usize, x2: usize) -> Node {
        Node { x1, x2 }
    }

    /// Total items sold so far.
    pub fn level(self) -> usize {
        self.x1 + self.x2
    }

    /// Items still for sale, `t(x) = T - x1 - x2`.
    ///
    /// # Panics
    ///
    /// Panics if the node lies outside the `items`-item lattice.
    pub fn items_remaining(self, items: usize) -> usize {
        items
            .checked_sub(self.level())
            .expect("node outside lattice")
    }

    /// True when all items are sold.
    pub fn is_terminal(self, items: usize) -> bool {
        self.items_remaining(items) == 0
    }

    /// The state after `winner` acquires one item.
    pub fn child(self, winner: Buyer) -> Node {
        match winner {
            Buyer::One => Node::new(self.x1 + 1, self.x2),
            Buyer::Two => Node::new(self.x1, self.x2 + 1),
        }
    }

    /// Items held by `buyer` at this node.
    pub fn holdings(self, buyer: Buyer) -> usize {
        match buyer {
            Buyer::One => self.x1,
            Buyer::Two => self.x2,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// All nodes of the `items`-item lattice, in row-major order
/// (`x1` ascending, then `x2` ascending).
pub fn lattice_nodes(items: usize) -> impl Iterator<Item = Node> {
    (0..=items).flat_map(move |x1| (0..=items - x1).map(move |x2| Node::new(x1, x2)))
}

/// All nodes with `x1 + x2 == level`, in `x1`-ascending order.
pub fn level_nodes(items: usize, level: usize) -> impl Iterator<Item = Node> {
    assert!(level <= items, "level {level} exceeds item count {items}");
    (0..=level).map(move |x1| Node::new(x1, level - x1))
}

/// A terminal split of the items: buyer 1 ends with `buyer1_items`,
/// buyer 2 with the rest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation {
    pub buyer1_items: usize,
}

impl Allocation {
    pub fn new(buyer1_items: usize) -> Allocation {
        Allocation { buyer1_items }
    }

    /// Items buyer 2 ends with in a `T`-item game.
    pub fn buyer2_items(self, items: usize) -> usize {
        items
            .checked_sub(self.buyer1_items)
            .expect("allocation outside game")
    }

    /// The terminal lattice node realizing this allocation.
    pub fn terminal_node(self, items: usize) -> Node {
        Node::new(self.buyer1_items, self.buyer2_items(items))
    }
}

/// One buyer's valuation as incremental values `v(1..=T)`.
///
/// `v(j)` is the marginal value of a j-th item; the cumulative value of `k`
/// items is the prefix sum `V(k)`. The valuation is *concave* when the
/// incremental values are nonincreasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncrementalValuation<S> {
    values: Vec<S>,
}

impl<S: Scalar> IncrementalValuation<S> {
    pub fn new(values: Vec<S>) -> Self {
        IncrementalValuation { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The incremental value `v(j)`, 1-based.
    ///
    /// # Panics
    ///
    /// Panics if `j == 0` or `j > len`.
    pub fn value(&self, j: usize) -> S {
        assert!(j >= 1, "incremental values are 1-based");
        self.values[j - 1].clone()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// `Σ_{j=lo}^{hi} v(j)`; zero when the range is empty (`hi < lo`).
    ///
    /// # Panics
    ///
    /// Panics if `lo == 0` or `hi > len`.
    pub fn sum_range(&self, lo: usize, hi: usize) -> S {
        assert!(lo >= 1, "incremental values are 1-based");
        assert!(
            hi <= self.values.len(),
            "sum_range end {hi} exceeds valuation length {}",
            self.values.len()
        );
        if hi < lo {
            return S::zero();
        }
        self.values[lo - 1..hi].iter().cloned().sum()
    }

    /// Cumulative value `V(k) = Σ_{j<=k} v(j)`.
    pub fn cumulative(&self, k: usize) -> S {
        self.sum_range(1, k)
    }

    /// True iff incremental values are nonincreasing.
    pub fn is_concave(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }

    /// True iff every incremental value is `>= 0` (free disposal).
    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= S::zero())
    }
}

/// A violation found by [`AuctionInstance::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValidationViolation {
    #[error("buyer {buyer}'s valuation has {actual} entries but the game sells {expected} items")]
    WrongLength {
        buyer: Buyer,
        expected: usize,
        actual: usize,
    },
    #[error("buyer {buyer}'s incremental value v({index}) is negative")]
    NegativeValue { buyer: Buyer, index: usize },
}

/// Outcome of instance validation: a violation inventory plus per-buyer
/// concavity flags (concavity is informational, not a validity requirement).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<ValidationViolation>,
    pub buyer1_concave: bool,
    pub buyer2_concave: bool,
}

impl ValidationReport {
    /// True when no violations were found.
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// True when both buyers have concave valuations.
    pub fn both_concave(&self) -> bool {
        self.buyer1_concave && self.buyer2_concave
    }

    pub fn concave(&self, buyer: Buyer) -> bool {
        match buyer {
            Buyer::One => self.buyer1_concave,
            Buyer::Two => self.buyer2_concave,
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "valid")?;
        } else {
            write!(f, "{} violation(s):", self.violations.len())?;
            for v in &self.violations {
                write!(f, " [{v}]")?;
            }
        }
        write!(
            f,
            " (buyer 1 {}concave, buyer 2 {}concave)",
            if self.buyer1_concave { "" } else { "not " },
            if self.buyer2_concave { "" } else { "not " },
        )
    }
}

/// The full game definition: item count plus both buyers' valuations.
///
/// Construction is unchecked so that [`Self::validate`] can report problems;
/// solvers validate before use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuctionInstance<S> {
    items: usize,
    v1: IncrementalValuation<S>,
    v2: IncrementalValuation<S>,
}

impl<S: Scalar> AuctionInstance<S> {
    pub fn new(items: usize, v1: Vec<S>, v2: Vec<S>) -> Self {
        AuctionInstance {
            items,
            v1: IncrementalValuation::new(v1),
            v2: IncrementalValuation::new(v2),
        }
    }

    /// Number of items for sale (`T`).
    pub fn items(&self) -> usize {
        self.items
    }

    pub fn v1(&self) -> &IncrementalValuation<S> {
        &self.v1
    }

    pub fn v2(&self) -> &IncrementalValuation<S> {
        &self.v2
    }

    pub fn valuation(&self, buyer: Buyer) -> &IncrementalValuation<S> {
        match buyer {
            Buyer::One => &self.v1,
            Buyer::Two => &self.v2,
        }
    }

    /// Checks valuation lengths and nonnegativity; flags per-buyer concavity.
    ///
    /// Returns a report rather than failing so callers can decide what to do
    /// with partially broken inputs.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for buyer in Buyer::BOTH {
            let valuation = self.valuation(buyer);
            if valuation.len() != self.items {
                violations.push(ValidationViolation::WrongLength {
                    buyer,
                    expected: self.items,
                    actual: valuation.len(),
                });
                continue; // per-entry checks would misattribute indices
            }
            for (idx, v) in valuation.values().iter().enumerate() {
                if *v < S::zero() {
                    violations.push(ValidationViolation::NegativeValue {
                        buyer,
                        index: idx + 1,
                    });
                }
            }
        }
        ValidationReport {
            violations,
            buyer1_concave: self.v1.is_concave(),
            buyer2_concave: self.v2.is_concave(),
        }
    }

    /// Number of lattice nodes, `(T+1)(T+2)/2`.
    pub fn node_count(&self) -> usize {
        (self.items + 1) * (self.items + 2) / 2
    }

    /// All lattice nodes in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = Node> {
        lattice_nodes(self.items)
    }

    /// All nodes with at least one item left to sell.
    pub fn decision_nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.nodes().filter(|n| !n.is_terminal(self.items))
    }

    /// Social welfare `sw(k | from)`: from node `from`, buyer 1 takes `k` of
    /// the remaining items and buyer 2 takes the rest.
    ///
    /// Equals `Σ_{j=x1+1}^{x1+k} v1(j) + Σ_{j=x2+1}^{T-x1-k} v2(j)`.
    ///
    /// # Panics
    ///
    /// Panics if `k > t(from)` or `from` lies outside the lattice.
    pub fn social_welfare(&self, from: Node, k: usize) -> S {
        let remaining = from.items_remaining(self.items);
        assert!(
            k <= remaining,
            "split {k} exceeds {remaining} remaining items at {from}"
        );
        let gain1 = self.v1.sum_range(from.x1 + 1, from.x1 + k);
        let gain2 = self.v2.sum_range(from.x2 + 1, self.items - from.x1 - k);
        gain1 + gain2
    }

    /// Optimal welfare from `from`: the maximum of `sw(k | from)` over
    /// `k ∈ {0..=t(from)}` together with the full argmax set.
    ///
    /// The whole argmax set matters because the efficiency-drop analysis
    /// distinguishes unique from non-unique optimal splits.
    pub fn opt_welfare(&self, from: Node) -> (S, BTreeSet<usize>) {
        let remaining = from.items_remaining(self.items);
        let mut best: Option<S> = None;
        let mut argmax = BTreeSet::new();
        for k in 0..=remaining {
            let sw = self.social_welfare(from, k);
            match &best {
                Some(b) if sw < *b => {}
                Some(b) if sw == *b => {
                    argmax.insert(k);
                }
                _ => {
                    best = Some(sw);
                    argmax = BTreeSet::from([k]);
                }
            }
        }
        (best.expect("at least one split"), argmax)
    }

    /// Welfare of playing from `from` to the terminal node of `endpoint`.
    ///
    /// # Panics
    ///
    /// Panics if `endpoint` is not reachable from `from`.
    pub fn welfare_to_endpoint(&self, from: Node, endpoint: Allocation) -> S {
        let k = endpoint
            .buyer1_items
            .checked_sub(from.x1)
            .expect("endpoint gives buyer 1 fewer items than it holds");
        self.social_welfare(from, k)
    }

    /// Efficiency of reaching `endpoint` from `from`:
    /// `sw / opt`, with the convention that it is `1` when `opt = 0`.
    ///
    /// Always lies in `[0, 1]` for valid instances.
    ///
    /// # Panics
    ///
    /// Panics if `endpoint` is not reachable from `from`.
    pub fn efficiency(&self, from: Node, endpoint: Allocation) -> S {
        assert!(
            endpoint.buyer2_items(self.items) >= from.x2,
            "endpoint gives buyer 2 fewer items than it holds"
        );
        let (opt, _) = self.opt_welfare(from);
        if opt.is_zero() {
            return S::one();
        }
        self.welfare_to_endpoint(from, endpoint) / opt
    }
}

/// Dense storage over the triangular lattice `{(x1, x2) : x1 + x2 <= T}`,
/// indexed by [`Node`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeTable<V> {
    items: usize,
    data: Vec<V>,
}

impl<V> NodeTable<V> {
    /// Builds a table by evaluating `f` at every node in row-major order.
    pub fn from_fn(items: usize, mut f: impl FnMut(Node) -> V) -> Self {
        let mut data = Vec::with_capacity((items + 1) * (items + 2) / 2);
        for node in lattice_nodes(items) {
            data.push(f(node));
        }
        NodeTable { items, data }
    }

    pub fn items(&self) -> usize {
        self.items
    }

    fn offset(&self, node: Node) -> usize {
        assert!(
            node.level() <= self.items,
            "node {node} outside {}-item lattice",
            self.items
        );
        // Rows 0..x1 have T+1-i entries each: x1(T+1) - x1(x1-1)/2.
        let x1 = node.x1;
        x1 * (self.items + 1) - (x1 * x1 - x1) / 2 + node.x2
    }

    pub fn get(&self, node: Node) -> &V {
        &self.data[self.offset(node)]
    }

    pub fn get_mut(&mut self, node: Node) -> &mut V {
        let idx = self.offset(node);
        &mut self.data[idx]
    }

    /// All `(node, value)` pairs in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (Node, &V)> {
        lattice_nodes(self.items).zip(self.data.iter())
    }
}

impl<V> Index<Node> for NodeTable<V> {
    type Output = V;

    fn index(&self, node: Node) -> &V {
        self.get(node)
    }
}

impl<V> IndexMut<Node> for NodeTable<V> {
    fn index_mut(&mut self, node: Node) -> &mut V {
        self.get_mut(node)
    }
}
