//! Shortcut-to-adiabaticity design and transient-energy analysis for a
//! harmonic trap whose frequency is changed in finite time.
//!
//! Units throughout: hbar = 1, mass = 1 unless set on the spec, angular
//! frequencies in rad/s, times in seconds.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energetics;
mod error;
pub mod numerics;
pub mod trajectories;
pub mod transitionless;
pub mod verifier;

pub use error::{Error, Result};
