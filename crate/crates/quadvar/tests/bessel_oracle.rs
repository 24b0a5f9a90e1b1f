//! Independent oracle for the Bessel implementation: adaptive quadrature of
//! the integral representation `K_ν(x) = ∫₀^∞ e^{−x cosh t} cosh(νt) dt`.
//! The quadrature shares nothing with the series/continued-fraction
//! evaluation path it checks.

use quadvar::specfun::bessel_k;

fn integrand(nu: f64, x: f64, t: f64) -> f64 {
    // e^{−x cosh t} cosh(νt) with the exponents combined so neither factor
    // overflows on the decaying tail
    let xc = x * t.cosh();
    0.5 * ((nu * t - xc).exp() + (-nu * t - xc).exp())
}

/// Adaptive Simpson with explicit interval bisection.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let simpson = |a: f64, m: f64, b: f64| (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    let whole = simpson(a, m, b);
    let left = simpson(a, 0.5 * (a + m), m);
    let right = simpson(m, 0.5 * (m + b), b);
    if depth == 0 {
        return left + right;
    }
    if (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, 0.5 * tol, depth - 1)
            + adaptive_simpson(f, m, b, 0.5 * tol, depth - 1)
    }
}

fn bessel_k_quadrature(nu: f64, x: f64) -> f64 {
    // integrand decays like exp(−x e^t / 2); cut where the exponent passes 1e3
    let t_max = ((2.0 * 1000.0 / x).ln()).max(2.0) + 2.0;
    let f = |t: f64| integrand(nu, x, t);
    // coarse pass to set a relative tolerance for the adaptive refinement
    let mut rough = 0.0;
    let panels = 64;
    for i in 0..panels {
        let a = t_max * i as f64 / panels as f64;
        let b = t_max * (i + 1) as f64 / panels as f64;
        rough += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    }
    let tol = 1e-14 * rough.abs().max(f64::MIN_POSITIVE);
    adaptive_simpson(&f, 0.0, t_max, tol, 30)
}

#[test]
fn quadrature_reproduces_k1_of_1() {
    let q = bessel_k_quadrature(1.0, 1.0);
    assert!(
        (q - 0.601907230197235).abs() < 1e-12,
        "quadrature self-check failed: {q}"
    );
    let k = bessel_k(1.0f64, 1.0).unwrap();
    assert!(
        ((k - q) / q).abs() < 1e-12,
        "K_1(1): implementation {k} vs quadrature {q}"
    );
}

#[test]
fn implementation_matches_quadrature_over_domain() {
    // sample of the target domain x ∈ (0, 50], ν ∈ (0, 10]
    let nus = [0.1, 0.5, 0.999999, 1.0, 1.75, 2.5, 3.3, 5.0, 7.25, 10.0];
    let xs = [0.005, 0.05, 0.3, 1.0, 1.999, 2.0, 2.001, 4.5, 10.0, 25.0, 50.0];
    for &nu in &nus {
        for &x in &xs {
            let q = bessel_k_quadrature(nu, x);
            let k = bessel_k(nu, x).unwrap();
            let rel = ((k - q) / q).abs();
            assert!(
                rel < 1e-12,
                "K_{nu}({x}): implementation {k:e} vs quadrature {q:e} (rel {rel:e})"
            );
        }
    }
}

#[test]
fn near_integer_orders_stay_accurate() {
    // the uniform prefactor treatment must not lose digits as ν crosses an
    // integer
    for &nu in &[
        2.0 - 1e-7,
        2.0 - 1e-10,
        2.0,
        2.0 + 1e-10,
        2.0 + 1e-7,
        3.0 - 1e-9,
        3.0 + 1e-9,
    ] {
        for &x in &[0.3, 1.5, 8.0] {
            let q = bessel_k_quadrature(nu, x);
            let k = bessel_k(nu, x).unwrap();
            let rel = ((k - q) / q).abs();
            assert!(rel < 1e-12, "K_{nu}({x}) rel err {rel:e}");
        }
    }
}
