//! Gauss–Chebyshev rules for integrands with inverse-square-root endpoints.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const START: usize = 16;
const MAX_NODES: usize = 1 << 18;

/// ∫₋₁¹ h(x)/√(1−x²) dx with N first-kind nodes.
pub fn cheb_rule<F: Fn(f64) -> Complex64>(h: &F, n: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..=n {
        let x = ((2 * k - 1) as f64 * PI / (2 * n) as f64).cos();
        acc += h(x);
    }
    acc * (PI / n as f64)
}

fn doubling<F: Fn(f64) -> Complex64>(h: F, tol: f64) -> Result<Complex64> {
    let mut n = START;
    let mut prev = cheb_rule(&h, n);
    let mut change = f64::INFINITY;
    while n < MAX_NODES {
        n *= 2;
        let next = cheb_rule(&h, n);
        change = (next - prev).norm();
        if !change.is_finite() {
            return Err(Error::QuadratureNotConverged(change));
        }
        if change <= tol * next.norm().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNotConverged(change))
}

/// ∫_a^b f(λ) / √((λ−a)(b−λ)) dλ.
pub fn finite_band<F: Fn(f64) -> Complex64>(a: f64, b: f64, f: F, tol: f64) -> Result<Complex64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    doubling(|x| f(mid + half * x), tol)
}

/// ∫_a^∞ f(λ) / √(λ−a) dλ, via λ = a + L·t/(1−t). Needs f = O(1/λ).
pub fn half_line<F: Fn(f64) -> Complex64>(a: f64, scale: f64, f: F, tol: f64) -> Result<Complex64> {
    let sl = scale.sqrt();
    doubling(
        |x| {
            let t = 0.5 * (1.0 + x);
            let one_m = 0.5 * (1.0 - x);
            if one_m <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let lam = a + scale * t / one_m;
            f(lam) * (sl / one_m)
        },
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cr(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn constant_on_band_is_pi() {
        let v = finite_band(0.0, 1.0, |_| cr(1.0), 1e-12).unwrap();
        assert!((v.re - PI).abs() < 1e-14);
    }

    #[test]
    fn polynomial_moments() {
        // ∫_{-1}^{1} x² / √(1−x²) = π/2
        let v = finite_band(-1.0, 1.0, |x| cr(x * x), 1e-13).unwrap();
        assert!((v.re - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn half_line_against_closed_form() {
        // ∫_0^∞ dλ / (√λ (λ + c)) = π / √c
        for c in [0.5, 1.0, 7.0] {
            for scale in [1.0, 10.0] {
                let v = half_line(0.0, scale, |l| cr(1.0 / (l + c)), 1e-12).unwrap();
                assert!((v.re - PI / c.sqrt()).abs() < 1e-11, "c={c}");
            }
        }
    }

    #[test]
    fn complex_pole_off_axis() {
        // ∫_0^1 dλ / (√(λ(1−λ)) (λ − z)) = −π / √(z(z−1)) with the branch ~ 1/z at ∞
        let z = Complex64::new(0.3, 0.5);
        let v = finite_band(0.0, 1.0, |l| (cr(l) - z).inv(), 1e-12).unwrap();
        let r = (z * (z - 1.0)).sqrt();
        let r = if (r / z).re < 0.0 { -r } else { r };
        assert!((v + PI / r).norm() < 1e-10);
    }

    #[test]
    fn nonconvergence_reported() {
        let r = finite_band(0.0, 1.0, |l| cr((1e7 * l).cos()), 1e-12);
        assert!(matches!(r, Err(Error::QuadratureNotConverged(_))));
    }
}
