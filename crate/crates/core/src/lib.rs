//! Exact analysis of two-buyer sequential second-price multiunit auctions.
//!
//! `T` identical items are sold one per round by second-price auctions to two
//! buyers with declining (or arbitrary) marginal values. This crate:
//!
//! - computes the subgame-perfect equilibrium of the full game by backward
//!   induction over the allocation lattice ([`equilibrium`]),
//! - verifies the structural facts that equilibrium play obeys — no-free-win
//!   monotonicity, declining prices, nonnegativity, utility bounds, and the
//!   valid inequalities satisfied by equilibrium endpoints — as executable
//!   checks ([`checks`]),
//! - derives worst-case efficiency (price-of-anarchy) bounds three
//!   independent ways and proves they agree: a closed-form formula, an exact
//!   rational simplex solve of the bounding linear programs, and closed-form
//!   dual certificates ([`lp`]),
//! - generates the extremal instances attaining those bounds plus seeded
//!   random families for fuzzing ([`instances`]).
//!
//! All of this is generic over the [`scalar::Scalar`] field. The canonical
//! instantiation is the exact rational [`Rat`]; the headline guarantees
//! (tie detection, certificate tightness, byte-stable results) hold only
//! there. The type aliases below fix that canonical choice.
//!
//! Worst-case efficiency is `1 - 1/e` in the limit for concave valuations
//! and exactly `1/T` for general valuations; both bounds are reproduced
//! exactly, including the extremal instances that attain them.

pub mod auction;
pub mod checks;
pub mod equilibrium;
pub mod instances;
pub mod io;
pub mod lp;
pub mod scalar;

pub use auction::{
    lattice_nodes, level_nodes, Allocation, AuctionInstance, Buyer, IncrementalValuation, Node,
    NodeTable, ValidationReport, ValidationViolation,
};
pub use checks::{CheckReport, Witness};
pub use equilibrium::{
    solve, EquilibriumSolution, NodeAuction, NodeRecord, Outcome, PathReport, SolveError, TiePolicy,
};
pub use scalar::Scalar;

/// Canonical exact scalar: arbitrary-precision rational.
pub type Rat = num_rational::BigRational;

/// Auction instance over the canonical exact scalar.
pub type Instance = AuctionInstance<Rat>;

/// Equilibrium solution over the canonical exact scalar.
pub type Solution = EquilibriumSolution<Rat>;
