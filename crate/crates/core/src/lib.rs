//! Stochastic simulation of quantized light pulses in a one-dimensional
//! dielectric with dispersion, absorption and a Kerr nonlinearity.
//!
//! Field operators are represented by symmetrically ordered c-number
//! ensembles: every trajectory is a classical realization driven by
//! Langevin noise whose strength is tied to the absorption, and ensemble
//! moments stand in for operator expectation values.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linear_prop;
pub mod medium;
pub mod nlse;
pub mod numerics;
pub mod output;
pub mod scenario;
pub mod stochastic;
pub mod verify;

pub use error::{Error, Result};
