//! Solvers for inverse quasi-variational inequality problems.
//!
//! The problem: find a state `x` whose image `f(x)` lies in a state-dependent
//! closed convex set `Phi(x)` and satisfies `<x, y - f(x)> >= 0` for every
//! `y` in `Phi(x)`. Equivalently, `x` solves the projection equation
//! `f(x) = P_{Phi(x)}(f(x) - alpha * x)` for any `alpha > 0`.
//!
//! The crate provides:
//! - an exact-projection catalog of convex sets ([`sets`]),
//! - mappings, moving-set models and problem instances ([`problem`]),
//! - closed-form condition checks for existence, continuous-time stability
//!   and discrete-step convergence ([`analysis`]),
//! - a fixed-step ODE integrator for the associated projected dynamical
//!   system ([`ode`]),
//! - the discrete iteration, a Banach fixed-point variant and a
//!   constant-set special case ([`iteration`]),
//! - sampling-based solution certificates and brute-force oracles
//!   ([`certify`]).

pub mod analysis;
pub mod certify;
pub mod iteration;
pub mod linalg;
pub mod ode;
pub mod problem;
pub mod sets;

/// Errors shared by all solver and checker entry points.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    /// Malformed or out-of-contract input (bad bounds, too few samples, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Non-finite arithmetic encountered while evaluating or stepping.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Constants or gains outside the regime a result requires.
    #[error("regime violation: {0}")]
    Regime(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

pub(crate) fn ensure_finite(values: &[f64], context: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite value in {context}")))
    }
}
