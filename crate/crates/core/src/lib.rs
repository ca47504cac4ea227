//! Riemann–Liouville fractional calculus on bounded time scales.
//!
//! A time scale is a closed subset of ℝ built from intervals and isolated
//! points. The crate provides delta calculus on such sets, the fractional
//! integral and derivative of arbitrary non-integer order, checks of the
//! semigroup and inverse identities, and a Picard solver for
//! `D^α y = f(t, y)` with `I^{1−α} y(t0) = 0`.

pub mod calculus;
pub mod cli;
pub mod error;
pub mod expr;
pub mod fractional;
pub mod oracle;
pub mod solver;
pub mod specfun;
pub mod timescale;

pub use error::{Error, Result};
