//! Numerical library for K-theoretic instanton partition-function coefficients.
//!
//! The central objects are the coefficients Z_n of the instanton series,
//! computed here by three independent routes that must agree:
//!
//! 1. **Fixed-point sums** ([`nekrasov`]): finite sums over r-tuples of Young
//!    diagrams with rational-product terms built from arm/leg statistics.
//! 2. **Contour quadrature** ([`contour`]): n-dimensional torus integrals
//!    evaluated by tensor trapezoidal rules at spectral accuracy.
//! 3. **Shapovalov inversion** ([`virasoro`]): matrix elements of the inverse
//!    Gram matrix of a deformed Virasoro Verma module (the AGT route).
//!
//! Supporting modules: exact partition combinatorics ([`partitions`]), power
//! series utilities ([`series`]), log-gas potential theory on the torus
//! ([`potential`]), the sign/weight cancellation and telescoping identities of
//! the iterated residue calculus ([`residues`]), and the cross-validation
//! suites ([`checks`]).

pub mod checks;
pub mod contour;
pub mod nekrasov;
pub mod partitions;
pub mod potential;
pub mod residues;
pub mod series;
pub mod virasoro;

use thiserror::Error;

/// Library-wide error type. Operations fail loudly on degenerate parameters
/// rather than regularizing: a vanishing denominator factor means the input
/// violates a non-resonance (grid) condition and every downstream number
/// would be garbage.
#[derive(Debug, Error)]
pub enum Error {
    /// A denominator factor of a fixed-point term vanished within tolerance:
    /// the parameters sit on (or too near) a resonance of the grid condition.
    #[error("degenerate factor: {0}")]
    DegenerateFactor(String),

    /// Parameters violate the grid (non-resonance) condition; each entry
    /// describes one violated inequality.
    #[error("grid condition violated: {}", .0.join("; "))]
    GridViolation(Vec<String>),

    /// Parameters violate an admissibility hypothesis (e.g. the contour
    /// annulus |u_a| < rho < |q_i|^{-1}|u_a| is empty).
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    /// A quadrature point landed on a pole of the integrand.
    #[error("integrand pole hit: {0}")]
    PoleHit(String),

    /// The requested quadrature grid exceeds the evaluation budget.
    #[error("quadrature budget exceeded: {0}")]
    BudgetExceeded(String),

    /// A mode-algebra rewriting would exceed the configured level cap.
    #[error("level cap exceeded: {0}")]
    CapExceeded(String),

    /// The Shapovalov matrix is singular or nearly singular: the highest
    /// weight sits within the guard distance of a Kac-determinant zero.
    #[error("singular Shapovalov matrix: {0}")]
    SingularKacMatrix(String),

    /// Parameters lie outside the regime a formula is stated for.
    #[error("regime violation: {0}")]
    RegimeViolation(String),

    /// A Markov chain failed its mixing diagnostic (acceptance rate
    /// collapsed), so its estimates are not trustworthy.
    #[error("sampler failed to mix: {0}")]
    NonMixing(String),

    /// A box index lies outside the Young diagram it must belong to.
    #[error("box outside diagram: {0}")]
    BoxOutsideDiagram(String),

    /// An operation requiring a nonempty diagram got an all-empty tuple.
    #[error("all components empty")]
    AllComponentsEmpty,

    /// A parameter that must be nonzero is zero.
    #[error("zero parameter: {0}")]
    ZeroParameter(String),
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Relative tolerance for degenerate-factor detection. Double-precision
/// products over at most a few hundred factors keep roughly 1e-12 of
/// headroom, so anything smaller than this is treated as an exact hit of a
/// resonance rather than roundoff.
pub const TAU_GRID: f64 = 1e-9;
