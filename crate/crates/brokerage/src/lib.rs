//! Fee-setting brokerage mechanisms.
//!
//! A broker mediates trade between a seller with private cost `c ~ G` and a
//! buyer with private value `v ~ F` by posting a fee schedule `w(P)`: the
//! seller picks a price `P`, trade happens when `v >= P`, the buyer pays `P`,
//! the broker keeps `w(P)` and the seller receives `P - w(P)`.
//!
//! The crate computes the seller's Bayes-Nash equilibrium price map for a
//! given schedule, evaluates expected broker revenue and gains from trade
//! against the optimal-exchange and efficient (VCG) benchmarks, and verifies
//! the approximation bounds that relate them:
//!
//! * [`dist`] - value/cost distributions with virtual-preference, hazard,
//!   and transform queries
//! * [`mech`] - fee schedules, equilibrium strategies, and the benchmark
//!   mechanisms
//! * [`eval`] - expectation engine (adaptive quadrature or seeded Monte
//!   Carlo) producing revenue/surplus reports
//! * [`verify`] - one check per quantitative claim, the proper-schedule
//!   search, and the worst-case seller experiment
//! * [`num`] - shared numerical kernel (bisection, golden section, adaptive
//!   quadrature)

pub mod dist;
pub mod eval;
pub mod mech;
pub mod num;
pub mod verify;
