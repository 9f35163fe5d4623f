//! Deep-equilibrium compressed sensing.
//!
//! This crate implements an unsupervised learning pipeline for sparse signal
//! recovery from partial-orthogonal measurements `y = A h + n`:
//!
//! * [`model`] — the real-valued standard problem, complex→real embedding,
//!   projector utilities, and error metrics (MSE / projected MSE / NMSE);
//! * [`channel`] — sparse ground-truth generators (synthetic, far-field DFT,
//!   near-field polar dictionary) and a binary dataset format;
//! * [`sensing`] — partial-orthogonal measurement matrices, noisy
//!   measurement, and the sufficient statistic `u = AᵀC⁻¹y`;
//! * [`nn`] — a small Lipschitz-constrained zero-bias convolutional network
//!   with hand-written reverse-mode vector–Jacobian products;
//! * [`deq`] — the equilibrium solver: Picard fixed-point forward pass and
//!   the Jacobian-free backward pass;
//! * [`train`] — GSURE (unsupervised) and MSE-family (supervised) losses,
//!   Hutchinson divergence estimation, Adam, and the training loop;
//! * [`theory`] — the sparsity toolbox: ℓ₁/ℓ₂ measure, sparse growth
//!   function (numeric bound, closed form, brute-force search), brute-force
//!   RIP constants, sparsity bounds, and the oracle-gap bound;
//! * [`baselines`] — OMP, ISTA, and AMP reference solvers;
//! * [`oracle`] — slow, independent reference implementations (dense implicit
//!   gradients, finite differences) used to validate the fast paths in tests.
//!
//! Everything is `f64`, single-threaded, and deterministic given seeds.

pub mod baselines;
pub mod channel;
pub mod cplx;
pub mod deq;
pub mod linalg;
pub mod model;
pub mod nn;
pub mod oracle;
pub mod sensing;
pub mod theory;
pub mod train;
pub mod util;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector or matrix had the wrong size for the requested operation.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dim {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// Input failed a validation precondition (e.g. a non-unitary matrix
    /// passed to the real embedding).
    #[error("validation failed: {0}")]
    Validation(String),
    /// A file had the wrong magic bytes, version, or was truncated.
    #[error("bad file format: {0}")]
    Format(String),
    /// A numeric failure: NaN loss, singular system, combinatorial blow-up.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Underlying I/O error.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Tolerance constants shared across the crate and its test suites.
///
/// Centralized so every threshold has one authoritative definition.
pub mod tol {
    /// Partial orthogonality / projector identities: exact linear algebra in
    /// f64, allow ~5 digits of accumulated rounding.
    pub const ORTHO: f64 = 1e-10;
    /// Consistency of `u` with `AᵀC⁻¹y` when both are stored.
    pub const SUFFICIENT_STAT: f64 = 1e-12;
    /// Default relative fixed-point tolerance of the equilibrium solver.
    pub const FIXED_POINT: f64 = 1e-4;
    /// Spectral-normalization slack: product of layer norms vs. target.
    pub const LIPSCHITZ_SLACK: f64 = 1e-3;
}
