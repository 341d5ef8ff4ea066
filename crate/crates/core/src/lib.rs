//! Exact dynamics and figures of merit for the sunburst quantum Ising
//! battery: a transverse-field Ising ring used as a charger for `n`
//! external qubits.

// `!(x <= tol)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod observables;

pub use error::{Error, Result};
