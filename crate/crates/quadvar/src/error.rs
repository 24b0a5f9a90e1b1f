use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Smoothness order lies in the forbidden annulus around an integer:
    /// the non-integer branch of `G_ν` is singular there and the paper
    /// defines no limiting interpolation.
    #[error("nu = {nu} is within (1e-9, 1e-6) of an integer; G_nu is not evaluable there")]
    NearIntegerNu { nu: f64 },

    /// Parameter set violates a documented invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Increment order too small for the requested constant.
    #[error("increment order m = {m} too small: requires m > {bound}")]
    OrderTooSmall { m: usize, bound: f64 },

    /// Grid cannot accommodate the stencil.
    #[error("grid too small for stencil: axis {axis} has {count} points, needs > {needed}")]
    GridTooSmall {
        axis: usize,
        count: usize,
        needed: usize,
    },

    /// Bounded search for a usable increment-order pair failed.
    #[error("no valid (p, q) pair found: {0}")]
    NoValidPair(String),

    /// A direction norm estimate that must be positive was not.
    #[error("nonpositive norm estimate for direction {dir:?}: {value}")]
    NonpositiveNorm { dir: Vec<i64>, value: f64 },

    /// Direction missing from a norm table required by the recovery induction.
    #[error("direction {0:?} missing from norm table")]
    MissingDirection(Vec<i64>),

    /// Leading minor of the recovered triangular matrix is singular.
    #[error("singular leading minor of order {0} in anisotropy recovery")]
    SingularMinor(usize),

    /// Determinant that must be positive was not.
    #[error("nonpositive determinant: {0}")]
    NonpositiveDeterminant(f64),

    /// A denominator that the estimator requires to be nonzero vanished.
    #[error("degenerate denominator in {op}: |{value}| below tolerance")]
    DegenerateDenominator { op: &'static str, value: f64 },

    /// Dense factorization failed even after jitter escalation.
    #[error("covariance matrix not positive definite (jitter up to {max_jitter:e} tried)")]
    IndefiniteCovariance { max_jitter: f64 },

    /// Circulant embedding produced too much negative spectral mass.
    #[error("circulant embedding failed: clipped mass fraction {clipped_mass:e} exceeds {threshold:e}")]
    EmbeddingFailure { clipped_mass: f64, threshold: f64 },

    /// Field-file parse or I/O failure.
    #[error("field file error: {0}")]
    FieldFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }
}
