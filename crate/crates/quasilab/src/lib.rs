// Indexed loops in the numeric modules mirror the subscripts of the formulas
// they implement, and negated float comparisons (`!(x > y)`) are the
// NaN-rejecting form of the corresponding validations; both are deliberate.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

//! Finite-population mutation–selection dynamics on a single-peak fitness
//! landscape.
//!
//! The crate provides, from the ground up:
//!
//! - the sequence-level Wright–Fisher style resampling process
//!   ([`sequence`]), with exact transition-row enumeration for tiny instances;
//! - its lumping onto Hamming-distance class counts ([`occupancy`]), the
//!   partial order on occupancies, and the lumped kernels;
//! - a monotone one-step coupling and the lower/upper bounding processes it
//!   induces ([`coupling`]), plus the reduced chains on the first K+1 classes
//!   with exact small-instance transition probabilities ([`reduced`]);
//! - the infinite-population limit maps, their fixed points, and the
//!   convergence dichotomy ([`dynamics`]);
//! - binomial/multinomial rate functionals, one- and multi-step path costs,
//!   and the critical curve they define ([`rates`]);
//! - experiment drivers: stationary estimation, renewal-identity checks,
//!   hitting-time measurement, and phase-diagram scans ([`experiments`]).
//!
//! Monte Carlo work is replicated across deterministic per-replica RNG
//! streams ([`stream`]) and runs through an order-preserving map driver
//! ([`par`]) that is parallel when the default `parallel` feature is enabled
//! and sequential otherwise; either way the output bytes are identical for a
//! given seed.

pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod numeric;
pub mod occupancy;
pub mod output;
pub mod par;
pub mod params;
pub mod rates;
pub mod reduced;
pub mod sequence;
pub mod stream;
pub mod tol;

pub use error::{Error, Result};
pub use params::{ClassVector, ModelParams, RawParams, SimplexPoint};
