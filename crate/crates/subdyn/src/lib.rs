//! Numerical engine for Lagrangian and polysymplectic Hamiltonian dynamics of
//! n-dimensional submanifolds of an m-dimensional manifold.
//!
//! Submanifolds are handled as sections of a trivial bundle over an
//! n-dimensional base, so their dynamics becomes first-order field theory with
//! a twist: Lagrangians and Hamiltonians must be invariant under
//! reparametrizations of the base, which forces characteristic Noether
//! identities on their variational derivatives. This crate provides
//!
//! - coordinate-chart machinery for jets of submanifolds and jets of sections,
//!   with the lift/projection between the two pictures ([`charts`]),
//! - a second-order forward-mode differentiation engine and the variational
//!   operators built on it: Euler–Lagrange operator, prolongations, Noether
//!   currents and identity residuals ([`hyperdual`], [`varcalc`]),
//! - the concrete models: free and charged relativistic particle, Nambu–Goto
//!   sheet, and their momentum-space counterparts ([`models`]),
//! - the covariant Hamiltonian side: Legendre map, Hamiltonian map,
//!   associated-pair and Hamilton-equation residuals ([`phase`]),
//! - proper-time integration of the particle equations with constraint
//!   projection ([`dynamics`]),
//! - seeded sampling and batch residual campaigns, data-parallel via rayon
//!   when the `parallel` feature (default) is enabled ([`sample`], [`batch`],
//!   [`check`]).
//!
//! All operations are pure functions over immutable data and safe to share
//! across threads.

pub mod batch;
pub mod charts;
pub mod check;
pub mod dynamics;
pub mod fd;
pub mod hyperdual;
pub mod models;
pub mod phase;
pub mod sample;
pub mod varcalc;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// The matrix `M^c_b = (∂x'^c/∂y^k) y^k_b + ∂x'^c/∂x^b` is singular:
    /// the target split chart does not cover this jet.
    #[error("target split chart does not cover this jet (|det M| = {det:.3e})")]
    SingularM { det: f64 },

    /// A transition map has a singular Jacobian at the evaluation point.
    #[error("singular transition Jacobian ({which}, |det| = {det:.3e})")]
    SingularJacobian { which: &'static str, det: f64 },

    /// The base block of the velocity matrix is singular in the requested
    /// chart; the caller should try another split chart.
    #[error("jet is not regular in split chart with base indices {chart:?}")]
    NotRegularInChart { chart: Vec<usize> },

    /// A point lies outside the smoothness domain of a density.
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// Requested an operation for a base dimension it does not support.
    #[error("unsupported base dimension n = {0}")]
    UnsupportedDimension(usize),

    /// An integration step left the admissible region.
    #[error("integration step failed: {0}")]
    StepFailure(String),

    /// Rejection sampling hit its limit before collecting enough points.
    #[error("sampling exhausted: accepted {accepted} of {requested} within {attempts} attempts")]
    SamplingExhausted {
        requested: usize,
        accepted: usize,
        attempts: usize,
    },

    /// Invalid configuration or malformed input data.
    #[error("config error: {0}")]
    Config(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Relative singular-value threshold below which a matrix is treated as
/// singular: smallest singular value ≤ `SINGULAR_TOL` × largest.
pub const SINGULAR_TOL: f64 = 1e-9;
