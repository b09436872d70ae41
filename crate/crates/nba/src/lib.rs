//! Balls-into-bins allocation under noisy, adversarial and outdated load
//! information: a simulator plus an exact numerical-verification toolkit.
//!
//! The crate has two halves that check each other:
//!
//! * a fast sequential simulator ([`process`], [`harness`]) that reproduces
//!   the empirical gap behaviour of two-choice allocation under comparison
//!   noise, probabilistic noise, batching and delay, fully deterministically
//!   per `(seed, build)`;
//! * an exact oracle ([`oracle`], [`potential`], [`constants`]) that
//!   computes allocation probability vectors and expected one-step
//!   potential changes in closed form and certifies the one-step drop
//!   inequalities the analysis of these processes rests on.
//!
//! Start with the examples directory: each runnable example demonstrates
//! one capability end to end. The `nba` binary is a thin driver over
//! [`harness`] and the oracle verification suites.

pub mod constants;
pub mod harness;
pub mod load;
pub(crate) mod math;
pub mod oracle;
pub mod potential;
pub mod process;
pub mod rng;

pub use load::{LoadState, NormalizedView};
pub use process::{ProcessAux, ProcessSpec, Simulation};
pub use rng::RngStream;
