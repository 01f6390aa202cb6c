//! GHZ-diagonal states for entanglement-enhanced phase estimation.
//!
//! States are stored as sector tables over a generic [`Scalar`]; use
//! [`ExactState`] for rational arithmetic and [`FloatState`] for `f64`.
//! Dense `2^n x 2^n` matrices appear only in the cross-check oracles.

pub mod bell;
pub mod dense;
pub mod error;
pub mod estimation;
pub mod ptranspose;
pub mod qfi;
pub mod scalar;
pub mod state;

pub use error::{Error, Result};
pub use scalar::{ratio, CompensatedSum, Scalar};
pub use state::{build_rho_nk, build_rho_nkm, FamilyParams, GhzDiagonalState, RepIndex, Sign};

/// Exact rational scalar.
pub type Exact = num_rational::BigRational;

pub type ExactState = GhzDiagonalState<Exact>;
pub type FloatState = GhzDiagonalState<f64>;
pub type Float32State = GhzDiagonalState<f32>;
