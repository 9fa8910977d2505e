use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Scalar payloads are stored as `f64` so the error type does not depend on
/// the working precision.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{parameter}`: {message}")]
    Domain { parameter: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("objective `{objective}` returned a non-finite value at sample {sample}{}",
        coordinate.map(|j| format!(", coordinate {j}")).unwrap_or_default())]
    Evaluation {
        objective: String,
        sample: usize,
        coordinate: Option<usize>,
    },

    #[error("degenerate spectrum: all eigenvalues are zero")]
    DegenerateSpectrum,

    #[error("ridge fit failed: design matrix has numerical rank {rank} < {columns} columns; use a lower degree or more samples")]
    RankDeficientFit { rank: usize, columns: usize },

    #[error("ridge fit needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("subspaces have a principal angle of pi/2; the geodesic is not unique")]
    OrthogonalSubspaces,

    #[error("subspace mixing failed at s = {s}: {source}")]
    Mixing { s: f64, source: Box<Error> },

    #[error("combined quadratic is singular at t = {t}")]
    SingularScalarization { t: f64 },

    #[error("continuation failed at t = {t}: Hessian condition estimate {condition:e}")]
    ContinuationFailure { t: f64, condition: f64 },

    #[error("access-probability fixed point did not converge (residual {residual:e})")]
    FixedPoint { residual: f64 },

    #[error("active coordinate lies outside the projected domain; the inactive fiber is empty")]
    InfeasibleFiber,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
