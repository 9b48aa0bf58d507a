//! Error types shared across the library.

use num_complex::Complex64;
use thiserror::Error;

/// Errors from dielectric models and reflection coefficients.
#[derive(Debug, Clone, Error)]
pub enum MaterialError {
    /// The Drude dielectric function has a pole at zero frequency.
    #[error("dielectric function is singular at omega = 0")]
    DcPole,
    /// Operation requires a Drude model but a perfect reflector was given.
    #[error("operation is not defined for a perfect reflector")]
    Unsupported,
    /// Invalid model parameters.
    #[error("invalid material parameters: {0}")]
    InvalidParameters(String),
    /// Evaluation landed within the pole-proximity tolerance of r_p.
    #[error("reflection coefficient pole at omega = {omega}, p = {p}")]
    PoleProximity { omega: Complex64, p: f64 },
}

/// Errors from the quadrature engines.
#[derive(Debug, Clone, Error)]
pub enum QuadratureError {
    /// Integrand returned a non-finite value.
    #[error("non-finite integrand value at x = {abscissa}")]
    NonFinite { abscissa: f64 },
    /// Invalid quadrature specification.
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    /// Series acceleration failed to settle.
    #[error("oscillatory acceleration diverged (last partial sum {last_partial})")]
    AccelerationDiverged { last_partial: f64 },
}

/// Errors from complex root refinement.
#[derive(Debug, Clone, Error)]
pub enum RootError {
    /// Iteration cap reached before |f| dropped below tolerance.
    #[error("root iteration did not converge, last iterate {last}, |f| = {residual}")]
    NoConvergence { last: Complex64, residual: f64 },
    /// Root left the quadrant expected for the dispersion branch.
    #[error("root {root} escaped the expected quadrant")]
    QuadrantEscape { root: Complex64 },
    /// Denominator derivative vanished at the pole.
    #[error("degenerate pole: derivative magnitude {magnitude} below tolerance")]
    DegeneratePole { magnitude: f64 },
}

/// Errors from Green tensor evaluation.
#[derive(Debug, Clone, Error)]
pub enum GreensError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    /// Quadrature did not converge; carries the best estimate and bound.
    #[error("Green tensor quadrature did not converge (estimate {estimate}, bound {error_bound})")]
    NotConverged {
        estimate: Complex64,
        error_bound: f64,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Errors from potential evaluators.
#[derive(Debug, Clone, Error)]
pub enum PotentialError {
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Envelope extraction failed during decay-time fitting.
    #[error("envelope fit failed: {0}")]
    EnvelopeFit(String),
}
