use thiserror::Error;

/// Errors produced by the manifold library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error(
        "ambiguous spectral split: eigenvalue {re:+.6e}{im:+.6e}i lies within 0.1*gap of the gap boundary (gap = {gap})"
    )]
    AmbiguousSplit { re: f64, im: f64, gap: f64 },

    #[error("spectral abscissa violated: omega = {omega} but max Re(spectrum) = {abscissa}")]
    SpectralAbscissa { omega: f64, abscissa: f64 },

    #[error("time {t} outside timeline hull [{start}, {end}]")]
    OutsideTimeline { t: f64, start: f64, end: f64 },

    #[error("no contraction at this T (measured factor {factor:.3e})")]
    PicardNoContraction { factor: f64 },

    #[error("no contraction: shrink eps or adjust lambda (last increment ratio {ratio:.3e})")]
    LpNoContraction { ratio: f64 },

    #[error("fixed-point iteration did not reach tolerance {tol:.1e} in {iterations} iterations (last increment {increment:.3e})")]
    NotConverged {
        iterations: usize,
        increment: f64,
        tol: f64,
    },

    #[error("not a trajectory: residual {residual:.3e} exceeds {tol:.1e}")]
    NotATrajectory { residual: f64, tol: f64 },

    #[error("splitting inconsistent with Jacobian: |Df(0)| = {norm:.3e}")]
    InconsistentSplitting { norm: f64 },

    #[error("Newton iteration stagnated after {iterations} iterations (residual {residual:.3e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("degenerate pair: xi equals the carrier mode {0}")]
    DegeneratePair(i64),

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(&'static str),

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("trivial orbit")]
    TrivialOrbit,

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("Froude undefined for infinite depth")]
    FroudeUndefined,
}

impl Error {
    /// Whether the error stems from bad user input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidInput(_)
                | Error::UnknownModel(_)
                | Error::DegeneratePair(_)
                | Error::OutsideTimeline { .. }
                | Error::FroudeUndefined
                | Error::Empty(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
