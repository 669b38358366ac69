//! Finite-dimensional machinery for unital completely positive (UCP) maps.
//!
//! The crate builds, from a channel given in Kraus/Choi/superoperator form,
//! the fixed-point system, the ergodic (Cesàro) projection onto it, the
//! Choi–Effros product turning the fixed points into a C*-algebra (the
//! noncommutative Poisson boundary), the multiplicative domain and the
//! symbol homomorphism, and decides UCP-extension existence/uniqueness and
//! complete-isometry questions via semidefinite feasibility.  An exact
//! banded model of Toeplitz-plus-finite-rank operators covers the
//! infinite-dimensional shift counter-example.

pub mod boundary;
pub mod cpmap;
pub mod harness;
pub mod matalg;
pub mod numeric;
pub mod par;
pub mod sdp;
pub mod toeplitz;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative routine failed to converge or produced garbage.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A certified invariant failed after construction; signals a tolerance
    /// misconfiguration or a genuine bug, never a property of valid input.
    #[error("consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
