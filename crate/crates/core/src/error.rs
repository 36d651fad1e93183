use std::fmt;

/// Errors produced by the SBP pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Incompatible matrix/vector dimensions in a caller-supplied system.
    DimensionMismatch(String),
    /// Parameter triple outside the supported range (e.g. `r < s`).
    UnsupportedParameters(String),
    /// Grid too small to hold both closures and one full interior stencil.
    GridTooSmall { n: usize, min: usize },
    /// A feasibility search exhausted its closure-size cap.
    SearchCapExceeded { s: usize, t: usize, cap: usize },
    /// A condition the construction guarantees was violated; indicates a bug.
    Inconsistency(String),
    /// Time integration blew up.
    Diverged { t: f64 },
    /// The nonsymmetric eigensolver failed to converge.
    EigenvalueFailure(String),
    /// A coefficient token could not be parsed.
    InvalidCoefficient(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::UnsupportedParameters(msg) => write!(f, "unsupported parameters: {msg}"),
            Error::GridTooSmall { n, min } => {
                write!(f, "grid of {n} nodes too small, need at least {min}")
            }
            Error::SearchCapExceeded { s, t, cap } => write!(
                f,
                "no operator with s={s}, t={t} found for any closure size up to r={cap}"
            ),
            Error::Inconsistency(msg) => write!(f, "internal consistency violation: {msg}"),
            Error::Diverged { t } => write!(f, "time integration diverged near t={t}"),
            Error::EigenvalueFailure(msg) => write!(f, "eigenvalue computation failed: {msg}"),
            Error::InvalidCoefficient(msg) => write!(f, "invalid coefficient: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
