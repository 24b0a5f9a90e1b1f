//! Covariance families: Matérn, generalized power, powered exponential.
//!
//! Lags are physical coordinates (already divided by the grid resolution);
//! grid logic lives in [`crate::increments`]. All families are stationary
//! and even, and the anisotropic ones apply an upper triangular,
//! determinant-one deformation `M` inside an isotropic profile.

use crate::error::{Error, Result};
use crate::matrix::UpperTriangular;
use crate::scalar::Scalar;
use crate::specfun::{bessel_k, gamma_signed, ln_gamma, SmoothnessOrder};

/// Tolerance on `|det M − 1|` for anisotropy matrices.
pub const DET_ONE_TOL: f64 = 1e-9;

/// A stationary covariance function evaluated at a physical lag vector.
pub trait Covariance<T: Scalar>: Send + Sync {
    fn cov(&self, lag: &[T]) -> T;

    /// Covariance minus its first `drop` even Taylor terms
    /// `a_0 + a_1 |t|² + … + a_{drop−1} |t|^{2(drop−1)}`.
    ///
    /// Order-`m` increment stencils annihilate those terms identically, so
    /// expected quadratic variations may be computed from this residual
    /// instead of the full covariance; doing so removes a catastrophic
    /// cancellation for smooth covariances on fine grids. Returns `None`
    /// when the family cannot evaluate the residual at this lag, in which
    /// case callers must fall back to `cov` for every term of their sum.
    fn cov_minus_even_head(&self, _lag: &[T], _drop: usize) -> Option<T> {
        None
    }
}

fn check_aniso<T: Scalar>(m: &UpperTriangular<T>) -> Result<()> {
    if !m.has_positive_diagonal() {
        return Err(Error::InvalidParams(
            "anisotropy matrix must have strictly positive diagonal".into(),
        ));
    }
    let det = m.det();
    if (det - T::one()).abs() >= T::c(DET_ONE_TOL) {
        return Err(Error::InvalidParams(format!(
            "anisotropy matrix must have determinant 1 (got {det})"
        )));
    }
    Ok(())
}

/// Geometric anisotropic Matérn parameters `(σ, α, ν, M)`.
#[derive(Debug, Clone)]
pub struct MaternParams<T> {
    sigma: T,
    alpha: T,
    nu: SmoothnessOrder<T>,
    m: UpperTriangular<T>,
    /// 1 / (Γ(ν) 2^{ν−1})
    norm: T,
}

impl<T: Scalar> MaternParams<T> {
    pub fn new(sigma: T, alpha: T, nu: T, m: UpperTriangular<T>) -> Result<Self> {
        if !(sigma > T::zero()) || !(alpha > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "sigma = {sigma} and alpha = {alpha} must be > 0"
            )));
        }
        let nu = SmoothnessOrder::new(nu)?;
        check_aniso(&m)?;
        let norm = (-(ln_gamma(nu.nu())? + (nu.nu() - T::one()) * T::c(2.0).ln())).exp();
        Ok(Self { sigma, alpha, nu, m, norm })
    }

    /// Isotropic version (`M = I`) in dimension `d`.
    pub fn isotropic(sigma: T, alpha: T, nu: T, d: usize) -> Result<Self> {
        Self::new(sigma, alpha, nu, UpperTriangular::identity(d))
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn nu(&self) -> T {
        self.nu.nu()
    }
    pub fn anisotropy(&self) -> &UpperTriangular<T> {
        &self.m
    }
    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// `σ² α^{2ν}`, the identifiable amplitude-scale combination.
    pub fn sigma2_alpha2nu(&self) -> T {
        self.sigma * self.sigma * self.alpha.powf(T::c(2.0) * self.nu.nu())
    }

    /// Isotropic profile at radius `r ≥ 0`: `σ² (αr)^ν K_ν(αr) / (Γ(ν) 2^{ν−1})`,
    /// with the `r = 0` limit `σ²` handled explicitly.
    pub fn cov_radial(&self, r: T) -> T {
        let s2 = self.sigma * self.sigma;
        if r == T::zero() {
            return s2;
        }
        let x = self.alpha * r;
        // K_ν decays like e^{−x}; far past underflow the product is zero.
        if x > T::c(705.0) {
            return T::zero();
        }
        let k = bessel_k(self.nu.nu(), x).expect("positive arguments");
        s2 * x.powf(self.nu.nu()) * k * self.norm
    }

    /// Unit-parameter residual series; see [`Covariance::cov_minus_even_head`].
    fn unit_residual(&self, t: T, drop: usize) -> Option<T> {
        if self.nu.is_integer() || t > T::c(2.0) {
            return None;
        }
        if t == T::zero() {
            return Some(if drop == 0 { T::one() } else { T::zero() });
        }
        let nu = self.nu.nu();
        let g1mnu = gamma_signed(T::one() - nu).ok()?;
        let u = (t / T::c(2.0)) * (t / T::c(2.0));

        // even tail: Σ_{k ≥ drop} u^k / (k! Γ(k − ν + 1))
        let mut even = T::zero();
        let start = gamma_signed(T::of(drop) + T::one()).ok()? * gamma_signed(T::of(drop) - nu + T::one()).ok()?;
        let mut term = u.powi(drop as i32) / start;
        let mut k = drop;
        loop {
            even = even + term;
            k += 1;
            term = term * u / (T::of(k) * (T::of(k) - nu));
            if term.abs() < T::epsilon() * even.abs() && k > drop + 4 {
                break;
            }
            if k > 400 {
                return None;
            }
        }

        // irregular series: Σ_{k ≥ 0} u^k / (k! Γ(k + ν + 1))
        let mut irr = T::zero();
        let mut term = T::one() / gamma_signed(nu + T::one()).ok()?;
        let mut k = 0usize;
        loop {
            irr = irr + term;
            k += 1;
            term = term * u / (T::of(k) * (T::of(k) + nu));
            if term.abs() < T::epsilon() * irr.abs() && k > 4 {
                break;
            }
            if k > 400 {
                return None;
            }
        }

        let t_pow = (T::c(2.0) * nu * (t / T::c(2.0)).ln()).exp();
        Some(g1mnu * (even - t_pow * irr))
    }
}

impl<T: Scalar> Covariance<T> for MaternParams<T> {
    fn cov(&self, lag: &[T]) -> T {
        self.cov_radial(self.m.transformed_norm(lag))
    }

    fn cov_minus_even_head(&self, lag: &[T], drop: usize) -> Option<T> {
        let t = self.alpha * self.m.transformed_norm(lag);
        // residual scales like the unit covariance: K(r) = σ² K_unit(α|M r|)
        self.unit_residual(t, drop)
            .map(|r| self.sigma * self.sigma * r)
    }
}

/// Generalized power covariance `p(|t|) + c₁|t|^{δ₁} + c₂|t|^{δ₂}` with an
/// even polynomial `p` given by its coefficients on `1, |t|², |t|⁴, …`.
///
/// With `poly` empty this is a pure generalized (conditionally positive
/// definite) covariance; positive definiteness is not checked at
/// construction — the simulator diagnoses it spectrally.
#[derive(Debug, Clone)]
pub struct GenCovParams<T> {
    pub c1: T,
    pub delta1: T,
    pub c2: T,
    pub delta2: T,
    pub poly: Vec<T>,
}

fn near_even_integer<T: Scalar>(delta: T) -> bool {
    let half = delta / T::c(2.0);
    (half - half.round()).abs() < T::c(0.5e-9)
}

impl<T: Scalar> GenCovParams<T> {
    pub fn new(c1: T, delta1: T, c2: T, delta2: T, poly: Vec<T>) -> Result<Self> {
        if !(delta1 > T::zero()) || !(delta2 > delta1) {
            return Err(Error::InvalidParams(format!(
                "need 0 < delta1 < delta2 (got {delta1}, {delta2})"
            )));
        }
        if near_even_integer(delta1) || near_even_integer(delta2) {
            return Err(Error::InvalidParams(
                "delta1 and delta2 must not be even integers".into(),
            ));
        }
        Ok(Self { c1, delta1, c2, delta2, poly })
    }

    fn radial(&self, r: T) -> T {
        let r2 = r * r;
        let mut poly = T::zero();
        for &a in self.poly.iter().rev() {
            poly = poly * r2 + a;
        }
        if r == T::zero() {
            return poly;
        }
        poly + self.c1 * r.powf(self.delta1) + self.c2 * r.powf(self.delta2)
    }
}

impl<T: Scalar> Covariance<T> for GenCovParams<T> {
    fn cov(&self, lag: &[T]) -> T {
        let r = lag.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
        self.radial(r)
    }

    fn cov_minus_even_head(&self, lag: &[T], drop: usize) -> Option<T> {
        let r = lag.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
        if r == T::zero() {
            // only the polynomial tail survives at 0, and r^{2k} = 0 for k ≥ drop ≥ 1
            return Some(if drop == 0 { self.radial(T::zero()) } else { T::zero() });
        }
        let r2 = r * r;
        let mut tail = T::zero();
        for &a in self.poly.iter().skip(drop).rev() {
            tail = tail * r2 + a;
        }
        tail = tail * r2.powi(drop as i32);
        Some(tail + self.c1 * r.powf(self.delta1) + self.c2 * r.powf(self.delta2))
    }
}

/// Powered exponential covariance `σ² exp(−|αMt|^δ)`, `δ ∈ (0, 2)`.
#[derive(Debug, Clone)]
pub struct PowExpParams<T> {
    sigma: T,
    alpha: T,
    delta: T,
    m: UpperTriangular<T>,
}

impl<T: Scalar> PowExpParams<T> {
    pub fn new(sigma: T, alpha: T, delta: T, m: UpperTriangular<T>) -> Result<Self> {
        if !(sigma > T::zero()) || !(alpha > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "sigma = {sigma} and alpha = {alpha} must be > 0"
            )));
        }
        if !(delta > T::zero()) || !(delta < T::c(2.0)) {
            return Err(Error::InvalidParams(format!("delta = {delta} must lie in (0, 2)")));
        }
        check_aniso(&m)?;
        Ok(Self { sigma, alpha, delta, m })
    }

    pub fn isotropic(sigma: T, alpha: T, delta: T, d: usize) -> Result<Self> {
        Self::new(sigma, alpha, delta, UpperTriangular::identity(d))
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn delta(&self) -> T {
        self.delta
    }
    pub fn anisotropy(&self) -> &UpperTriangular<T> {
        &self.m
    }
    pub fn dim(&self) -> usize {
        self.m.dim()
    }
}

impl<T: Scalar> Covariance<T> for PowExpParams<T> {
    fn cov(&self, lag: &[T]) -> T {
        let r = self.m.transformed_norm(lag) * self.alpha;
        if r == T::zero() {
            return self.sigma * self.sigma;
        }
        self.sigma * self.sigma * (-r.powf(self.delta)).exp()
    }
}
