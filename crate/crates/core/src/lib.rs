//! Numerical laboratory for a planar SDE `dX = sigma(X, Y) dW, dY = 0` whose
//! coefficient oscillates at different integer frequencies on different
//! horizontal strips. Solutions started on one line are driven by a single
//! Brownian motion, yet behave almost independently across strips once the
//! frequencies separate.
//!
//! Modules:
//! - [`coeff`]: periodic profiles, frequency ladders, strip layouts, the field.
//! - [`sde`]: counter-based Brownian paths, Euler-Maruyama integration of
//!   common-noise bundles, frozen coefficients and the level race.
//! - [`homog`]: invariant measure, effective constants, realized (co)variation.
//! - [`bc`]: Borel-Cantelli bounds, exact tails, first-passage bounds, the
//!   passage planner and the sequence criterion checker.
//! - [`exp`]: experiments, configs and report emission used by the CLI.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bc;
pub mod coeff;
pub mod error;
pub mod exp;
pub mod gauss;
pub mod homog;
pub mod quad;
pub mod rng;
pub mod sde;

pub use error::{Error, Result};
