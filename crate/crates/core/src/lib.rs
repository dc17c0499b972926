//! Directed polymers in a Bernoulli space-time environment whose underlying
//! random walk makes unbounded, stretched-exponential jumps, together with the
//! directed first-passage percolation that governs their zero-temperature,
//! high-density behaviour.
//!
//! The crate is organised bottom-up:
//!
//! * [`env`] generates environments: i.i.d. Bernoulli fields, intensity-one
//!   Poisson point processes, the cell coupling between them and the
//!   field combinators (flip, superposition, nearest-open-site distance).
//! * [`kernel`] is the jump law `f(k) = c1 exp(-c2 k^alpha)` with certified
//!   normalisation and tail bounds.
//! * [`polymer`] holds the log-domain transfer-matrix recursion for `log Z_n`,
//!   exact Gibbs path sampling and the path-deformation diagnostics.
//! * [`fpp`] computes passage times by min-plus recursion, greedy bounds,
//!   face-to-face times and time-constant estimates.
//! * [`oracle`] contains brute-force reference implementations used to
//!   cross-check the recursions on small instances.
//! * [`experiments`] assembles all of the above into tabular sweeps.
//!
//! All jump lengths use the l1 norm.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod experiments;
pub mod fpp;
pub mod kernel;
pub mod lattice;
pub mod oracle;
pub mod polymer;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use kernel::{Beta, ModelParams};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
