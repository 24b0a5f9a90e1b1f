//! Lattice increment stencils, quadratic variations, and the normalized
//! increment constants.
//!
//! The order-`m` iterated increment along a lattice direction `h` has
//! coefficients `d_i = (−1)^{m+i} C(m, i)`; it annihilates polynomials of
//! degree below `m`. The quadratic variation of a field is the average of
//! rescaled squared increments over every site where the stencil fits,
//!
//! ```text
//! Q = (1/#sites) Σ_j n^e (Δ_h^m Y(j))²
//! ```
//!
//! with the exponent `e` equal to `2ν` for Matérn fields, `δ₁` for
//! generalized power covariances and `δ` for powered exponentials.
//!
//! The constants
//!
//! ```text
//! A(ν, m) = Σ_{i,j} d_i d_j G_ν(|i−j|)              (m > ν)
//! B(ν, m) = Σ_{i,j} d_i d_j (−ν) G_{ν+1}(|i−j|)     (m > ν+1)
//! C(p, δ, |h|) = |h|^δ Σ_{i,j} d_i d_j |i−j|^δ
//! D(p, δ) = Σ_{i,j} d_i d_j |i−j|^δ
//! ```
//!
//! normalize expected quadratic variations: `E Q → σ²α^{2ν}|Mh|^{2ν} A(ν,m)`
//! with second-order term `σ²α^{2ν+2}|Mh|^{2ν+2} B(ν,m) / n²`.

use crate::covariance::Covariance;
use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec, IndexIter};
use crate::scalar::{pairwise_sum, Scalar};
use crate::specfun::g_nu;

/// Iterated-increment stencil of order `m` along lattice direction `h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stencil {
    m: usize,
    h: Vec<i64>,
    coeffs: Vec<i64>,
}

fn binomial(n: usize, k: usize) -> i64 {
    let k = k.min(n - k);
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    acc
}

impl Stencil {
    /// Build the order-`m` stencil along `h`; rejects `m = 0` and `h = 0`.
    pub fn new(m: usize, h: &[i64]) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("stencil", "order m must be >= 1"));
        }
        if h.is_empty() || h.iter().all(|&c| c == 0) {
            return Err(Error::domain("stencil", "direction h must be nonzero"));
        }
        let coeffs = (0..=m)
            .map(|i| {
                let b = binomial(m, i);
                if (m + i) % 2 == 0 {
                    b
                } else {
                    -b
                }
            })
            .collect();
        Ok(Self { m, h: h.to_vec(), coeffs })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn direction(&self) -> &[i64] {
        &self.h
    }

    #[inline]
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Euclidean norm of the lattice direction.
    pub fn direction_norm<T: Scalar>(&self) -> T {
        self.h
            .iter()
            .fold(T::zero(), |a, &c| a + T::c((c * c) as f64))
            .sqrt()
    }
}

/// Apply the iterated increment; the output grid is shrunk by `m·|h_k|`
/// along each axis and its origin shifted so indices stay aligned with the
/// input lattice.
pub fn apply_increment<T: Scalar>(field: &GridField<T>, st: &Stencil) -> Result<GridField<T>> {
    let spec = field.spec();
    let d = spec.dim();
    if st.h.len() != d {
        return Err(Error::InvalidParams(format!(
            "stencil direction has dimension {}, field has {d}",
            st.h.len()
        )));
    }
    let m = st.m as i64;
    let mut out_counts = Vec::with_capacity(d);
    let mut lo = Vec::with_capacity(d);
    for k in 0..d {
        let shrink = (m * st.h[k].abs()) as usize;
        let count = spec.counts()[k];
        if count <= shrink {
            return Err(Error::GridTooSmall {
                axis: k,
                count,
                needed: shrink,
            });
        }
        out_counts.push(count - shrink);
        lo.push(if st.h[k] < 0 { shrink } else { 0 });
    }

    let strides = spec.strides();
    // one increment step moves this many positions in the flat input array
    let step: i64 = strides
        .iter()
        .zip(&st.h)
        .map(|(&s, &hk)| s as i64 * hk)
        .sum();
    let base_offset: usize = strides.iter().zip(&lo).map(|(&s, &l)| s * l).sum();

    let out_spec = spec.sub_block(&lo, out_counts.clone())?;
    let values_in = field.values();
    let mut values = Vec::with_capacity(out_spec.total_points());
    for idx in IndexIter::new(&out_counts) {
        let base =
            base_offset as i64 + strides.iter().zip(&idx).map(|(&s, &i)| (s * i) as i64).sum::<i64>();
        let mut acc = T::zero();
        for (i, &c) in st.coeffs.iter().enumerate() {
            let pos = (base + i as i64 * step) as usize;
            acc = acc + T::c(c as f64) * values_in[pos];
        }
        values.push(acc);
    }
    GridField::new(out_spec, values)
}

/// Quadratic variation `(1/#sites) Σ n^e (Δ_h^m Y)²` over every site of
/// `field` where the stencil fits.
pub fn quadratic_variation<T: Scalar>(field: &GridField<T>, st: &Stencil, exponent: T) -> Result<T> {
    let inc = apply_increment(field, st)?;
    Ok(rescaled_mean_square(&inc, exponent))
}

/// Quadratic variation restricted to the low-corner block of `nominal`
/// sites per axis of the increment field (the observation region proper,
/// when the field was simulated on a margin-enlarged grid).
pub fn quadratic_variation_windowed<T: Scalar>(
    field: &GridField<T>,
    st: &Stencil,
    exponent: T,
    nominal: &[usize],
) -> Result<T> {
    let inc = apply_increment(field, st)?.crop(nominal)?;
    Ok(rescaled_mean_square(&inc, exponent))
}

fn rescaled_mean_square<T: Scalar>(inc: &GridField<T>, exponent: T) -> T {
    let squares: Vec<T> = inc.values().iter().map(|&v| v * v).collect();
    let mean = pairwise_sum(&squares) / T::of(squares.len());
    let n = T::of(inc.spec().resolution() as usize);
    n.powf(exponent) * mean
}

/// `A(ν, m) = Σ_{i,j} d_i d_j G_ν(|i−j|)`, defined for `m > ν`.
pub fn coeff_a<T: Scalar>(nu: T, m: usize) -> Result<T> {
    if !(T::of(m) > nu) {
        return Err(Error::OrderTooSmall {
            m,
            bound: nu.to_f64().unwrap_or(f64::NAN),
        });
    }
    stencil_double_sum(m, |l| g_nu(nu, T::of(l)))
}

/// `B(ν, m) = Σ_{i,j} d_i d_j (−ν) G_{ν+1}(|i−j|)`, defined for `m > ν+1`.
pub fn coeff_b<T: Scalar>(nu: T, m: usize) -> Result<T> {
    if !(T::of(m) > nu + T::one()) {
        return Err(Error::OrderTooSmall {
            m,
            bound: (nu + T::one()).to_f64().unwrap_or(f64::NAN),
        });
    }
    stencil_double_sum(m, |l| g_nu(nu + T::one(), T::of(l)).map(|g| -nu * g))
}

/// `D(p, δ) = Σ_{i,j} d_i d_j |i−j|^δ`.
pub fn coeff_d<T: Scalar>(p: usize, delta: T) -> Result<T> {
    if p == 0 {
        return Err(Error::domain("coeff_d", "p must be >= 1"));
    }
    if !(delta > T::zero()) {
        return Err(Error::domain("coeff_d", format!("delta = {delta} must be > 0")));
    }
    stencil_double_sum(p, |l| Ok(T::of(l).powf(delta)))
}

/// `C(p, δ, |h|) = |h|^δ D(p, δ)`.
pub fn coeff_c<T: Scalar>(p: usize, delta: T, h_norm: T) -> Result<T> {
    if !(h_norm > T::zero()) {
        return Err(Error::domain("coeff_c", format!("|h| = {h_norm} must be > 0")));
    }
    Ok(h_norm.powf(delta) * coeff_d(p, delta)?)
}

/// `Σ_{i,j=0}^m d_i d_j f(|i−j|)`, grouped by `|i−j|` (the `l = 0` term is
/// skipped for `f` with `f(0) = 0`; all callers here satisfy that).
fn stencil_double_sum<T: Scalar>(m: usize, f: impl Fn(usize) -> Result<T>) -> Result<T> {
    let st = Stencil::new(m, &[1])?;
    let d = st.coeffs();
    let mut acc = T::zero();
    for l in 1..=m {
        let mut w: i64 = 0;
        for i in 0..=(m - l) {
            w += d[i] * d[i + l];
        }
        acc = acc + T::c(2.0 * w as f64) * f(l)?;
    }
    Ok(acc)
}

/// Deterministic expected quadratic variation
/// `n^e Σ_{i,j} d_i d_j cov((i−j)·h/n)` — no sampling.
///
/// When the covariance exposes an even-head residual
/// ([`Covariance::cov_minus_even_head`]) for every required lag, the sum is
/// taken over residuals instead: the stencil annihilates the dropped even
/// polynomial identically, so the two sums agree mathematically, but the
/// residual form avoids the cancellation that makes the direct sum lose all
/// significant digits for smooth covariances on fine grids.
pub fn expected_qv<T: Scalar>(
    cov: &dyn Covariance<T>,
    grid: &GridSpec,
    st: &Stencil,
    exponent: T,
) -> T {
    let n = T::of(grid.resolution() as usize);
    let m = st.m;
    let d = st.coeffs();

    let lag_at = |l: i64| -> Vec<T> {
        st.h.iter()
            .map(|&hk| T::c((l * hk) as f64) / n)
            .collect()
    };

    // weights w_l = Σ_{i−j=l} d_i d_j for l = −m..m
    let weight = |l: i64| -> T {
        let l = l.unsigned_abs() as usize;
        let mut w: i64 = 0;
        for i in 0..=(m - l) {
            w += d[i] * d[i + l];
        }
        T::c(w as f64)
    };

    // try the residual route first; fall back wholesale if any lag lacks it
    let mut residual_sum = Some(T::zero());
    for l in -(m as i64)..=(m as i64) {
        match cov.cov_minus_even_head(&lag_at(l), m) {
            Some(r) => {
                if let Some(acc) = residual_sum.as_mut() {
                    *acc = *acc + weight(l) * r;
                }
            }
            None => {
                residual_sum = None;
                break;
            }
        }
    }
    let sum = residual_sum.unwrap_or_else(|| {
        let mut acc = T::zero();
        for l in -(m as i64)..=(m as i64) {
            acc = acc + weight(l) * cov.cov(&lag_at(l));
        }
        acc
    });
    n.powf(exponent) * sum
}

/// Smallest `(p, q)` for the Matérn second-order separation in dimension
/// `d > 4`: `p` is the least integer with `p > ν+1` and `2p − 2ν > 4`, and
/// `q ∈ (p, p+10]` is the least order making the combination
/// `B(ν,p) − (A(ν,p)/A(ν,q)) B(ν,q)` numerically nonvanishing.
pub fn select_pq<T: Scalar>(nu: T, d: usize) -> Result<(usize, usize)> {
    if d <= 4 {
        return Err(Error::domain(
            "select_pq",
            format!("second-order separation requires d > 4 (got d = {d})"),
        ));
    }
    let mut p = 1usize;
    while !(T::of(p) > nu + T::one() && T::c(2.0) * T::of(p) - T::c(2.0) * nu > T::c(4.0)) {
        p += 1;
        if p > 64 {
            return Err(Error::NoValidPair("no p satisfies the order thresholds".into()));
        }
    }
    let q = select_q_matern(nu, p)?;
    Ok((p, q))
}

/// Bounded search for `q > p` with a nonvanishing `B`-combination.
pub fn select_q_matern<T: Scalar>(nu: T, p: usize) -> Result<usize> {
    let a_p = coeff_a(nu, p)?;
    let b_p = coeff_b(nu, p)?;
    for q in (p + 1)..=(p + 10) {
        let a_q = coeff_a(nu, q)?;
        let b_q = coeff_b(nu, q)?;
        let comb = b_p - a_p / a_q * b_q;
        if comb.abs() > T::c(1e-8) * b_p.abs() {
            return Ok(q);
        }
    }
    Err(Error::NoValidPair(format!(
        "no q in ({p}, {}] gives a nonvanishing B-combination",
        p + 10
    )))
}
