//! Assignment mechanisms that stay honest without payments.
//!
//! Jobs hold a private set of compatible machines and report any subset of
//! edges they like; values, sizes, and capacities are public. The mechanisms
//! in this crate choose assignments so that no job can strictly gain by
//! misreporting its edges, and every one of them comes with an exact
//! brute-force auditor that checks precisely that claim on small instances.
//!
//! All arithmetic is exact rational; audits compare utilities with `==` and
//! `<`, never with tolerances.

pub mod assignment;
pub mod audit;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod fractional;
pub mod gen;
pub mod instance;
pub mod io;
pub mod lp;
pub mod matching;
pub mod mechanism;
pub mod rational;
pub mod rounding;

#[cfg(test)]
pub(crate) mod testutil;

pub use assignment::{utility, welfare, Assignment, FractionalAssignment, Outcome, OutcomeLottery};
pub use error::{Error, Result, Violation};
pub use instance::{canonical_edge_order, EdgeSet, Instance, Variant};
pub use rational::Rational;
