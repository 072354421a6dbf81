//! Numerics for asymptotically periodic time-inhomogeneous Markov processes.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. It covers:
//!
//! * [`timefn`]: time-function expressions with exact first and second
//!   derivatives, plus a small text grammar.
//! * [`quad`]: adaptive Simpson quadrature and grid cumulative integrals.
//! * [`rng`]: a counter-based generator with keyed substreams.
//! * [`process`]: path ensembles and time averages of observables.
//! * [`ou`]: the Ornstein–Uhlenbeck process with time-dependent drift rate,
//!   sampled exactly from its Gaussian transitions.
//! * [`periodic`]: the invariant law of the periodic skeleton and the
//!   period-averaged limit of time averages.
//! * [`lyapunov`]: drift/minorization certificates, ψ-distances and
//!   contraction-rate fits.
//! * [`ergodic`]: L² and single-path convergence experiments.
//! * [`absorbed`]: Brownian motion killed at a moving boundary, Girsanov
//!   weights, Fleming–Viot particles and quasi-ergodic estimation.
//!
//! Monte Carlo loops take explicit replica ranges and return mergeable
//! tallies so that callers can split the work across threads and still
//! get bit-identical results for a fixed chunking.

#![no_std]
// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod absorbed;
pub mod ergodic;
mod error;
pub mod lyapunov;
pub mod ou;
pub mod periodic;
pub mod process;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;
pub mod timefn;

pub use error::{Error, Result};
pub use rng::Stream;
pub use timefn::{TimeFunction, TimeGrid};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
