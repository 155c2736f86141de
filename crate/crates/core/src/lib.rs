//! Simulator for a periodically driven qubit-cavity system: drive dressing,
//! Lindblad dynamics and steady states, Maxwell–Bloch mean-field theory,
//! Gaussian states and Wigner functions.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dressing;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod lindblad;
pub mod meanfield;
pub mod ode;
pub mod scenario;
pub mod wigner;

pub use error::{Error, Result};
