//! Increment-based estimation for stationary Gaussian random fields.
//!
//! The library implements the quadratic-variation machinery for lattice
//! observations of a random field: iterated directional increments
//! annihilate the smooth (even polynomial) part of an autocovariance and
//! expose the coefficients on its irregular terms, from which variance,
//! spatial scale and a geometric anisotropy can be recovered.
//!
//! Supported covariance families:
//!
//! * Matérn `σ²(α|Mt|)^ν K_ν(α|Mt|) / (Γ(ν) 2^{ν−1})` with an upper
//!   triangular, determinant-one anisotropy `M`,
//! * generalized power covariances `p(|t|) + c₁|t|^{δ₁} + c₂|t|^{δ₂}`
//!   with an even polynomial `p`,
//! * powered exponentials `σ² exp(−|αMt|^δ)`, `δ ∈ (0, 2)`.
//!
//! Module map:
//!
//! * [`specfun`] — modified Bessel function of the second kind, log-gamma,
//!   and the principal irregular term `G_ν`.
//! * [`covariance`] — the three covariance families.
//! * [`increments`] — lattice stencils, quadratic variations, the
//!   normalized increment constants `A/B/C/D`, and deterministic expected
//!   quadratic variations.
//! * [`estimators`] — recovery of `σ²α^{2ν}`, `M`, `α` (for `d > 4`),
//!   two-term irregular coefficients with bias correction, and the
//!   powered-exponential estimators.
//! * [`fieldsim`] — exact (dense factorization) and circulant-embedding
//!   samplers with reproducible counter-derived replicate streams.
//! * [`io`] — the `GRIDFIELD` file format and a CSV alternative.
//!
//! All numerical code is generic over the scalar type through the
//! [`Scalar`] trait (`f32` or `f64`); concrete aliases for the common
//! `f64` instantiations are exported at the crate root. Accuracy targets
//! quoted in the documentation assume `f64`.

pub mod covariance;
pub mod estimators;
pub mod fieldsim;
pub mod grid;
pub mod increments;
pub mod io;
pub mod matrix;
pub mod scalar;
pub mod specfun;

mod error;

pub use error::{Error, Result};
pub use scalar::{Scalar, SimScalar};

/// `f64` Matérn parameter set.
pub type MaternParams64 = covariance::MaternParams<f64>;
/// `f64` generalized power-covariance parameter set.
pub type GenCovParams64 = covariance::GenCovParams<f64>;
/// `f64` powered-exponential parameter set.
pub type PowExpParams64 = covariance::PowExpParams<f64>;
/// `f64` lattice field.
pub type GridField64 = grid::GridField<f64>;
/// `f64` upper-triangular matrix.
pub type UpperTriangular64 = matrix::UpperTriangular<f64>;
/// `f64` estimate report.
pub type EstimateReport64 = estimators::EstimateReport<f64>;
