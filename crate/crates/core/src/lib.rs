//! Transient-stability bounds for multi-machine power grids.
//!
//! The crate is `no_std` (it needs `alloc`). It covers the whole numerical
//! pipeline: the classical-model network ([`netmodel`]), the pre-fault power
//! flow ([`powerflow`]), the swing-equation oracle ([`dynamics`]), the
//! sinusoidal envelope of the rotor-angle-diameter dynamics ([`envelope`]),
//! the piecewise-linear second-order Gronwall bound ([`gronwall`]) and the
//! clearing-time assessment built on top of them ([`assess`]).
//!
//! File formats, reports and the command-line front end live in the `tsbound`
//! crate.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assess;
pub mod dynamics;
pub mod envelope;
mod error;
pub mod gronwall;
pub mod linalg;
pub mod netmodel;
pub mod powerflow;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Default stability threshold on the rotor-angle diameter (rad).
pub const DEFAULT_ZETA: f64 = core::f64::consts::PI;
