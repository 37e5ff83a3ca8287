//! Weierstrass ℘ for real rectangular lattices (three real roots).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::branch::BandStructure;
use crate::error::{Error, Result};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticCurve {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub g2: f64,
    pub g3: f64,
    /// Real half-period.
    pub omega1: f64,
    /// Imaginary half-period ω₃ (purely imaginary, Im > 0).
    pub omega3: Complex64,
    /// Shift s = (E₀+E₁+E₂)/3 when built from bands, otherwise 0.
    pub s: f64,
}

const HALF_PERIOD_TOL: f64 = 1e-14;

impl EllipticCurve {
    /// Curve with roots e₁ > e₂ > e₃ summing to zero.
    pub fn from_roots(e1: f64, e2: f64, e3: f64) -> Result<Self> {
        if !(e1 > e2 && e2 > e3) {
            return Err(Error::DegenerateGap(e2, e1));
        }
        let sum = e1 + e2 + e3;
        if sum.abs() > 1e-12 * (e1.abs() + e3.abs()) {
            return Err(Error::Invalid(format!("roots must sum to zero, got {sum}")));
        }
        let g2 = -4.0 * (e1 * e2 + e1 * e3 + e2 * e3);
        let g3 = 4.0 * e1 * e2 * e3;
        let a = e1 - e3;
        let b = e2 - e3;
        let scale = a;
        // ω₁ = ∫_{e₁}^∞ dt / √(4(t−e₁)(t−e₂)(t−e₃))
        let omega1 = quadrature::half_line(
            e1,
            scale,
            |t| Complex64::new(0.5 / ((t - e2) * (t - e3)).sqrt(), 0.0),
            HALF_PERIOD_TOL,
        )?
        .re;
        // −iω₃ = ∫_0^∞ ds / √(4 s (s+a)(s+b))
        let omega3_im = quadrature::half_line(
            0.0,
            scale,
            |s| Complex64::new(0.5 / ((s + a) * (s + b)).sqrt(), 0.0),
            HALF_PERIOD_TOL,
        )?
        .re;
        Ok(EllipticCurve {
            e1,
            e2,
            e3,
            g2,
            g3,
            omega1,
            omega3: Complex64::new(0.0, omega3_im),
            s: 0.0,
        })
    }

    pub fn period(&self) -> f64 {
        2.0 * self.omega1
    }

    pub fn discriminant(&self) -> f64 {
        self.g2.powi(3) - 27.0 * self.g3 * self.g3
    }

    /// Coefficients of 4t³ − g₂t − g₃ minus those of 4(t−e₁)(t−e₂)(t−e₃), max abs.
    pub fn coefficient_mismatch(&self) -> f64 {
        let (e1, e2, e3) = (self.e1, self.e2, self.e3);
        let c2 = -4.0 * (e1 + e2 + e3);
        let c1 = 4.0 * (e1 * e2 + e1 * e3 + e2 * e3);
        let c0 = -4.0 * e1 * e2 * e3;
        c2.abs().max((c1 + self.g2).abs()).max((c0 + self.g3).abs())
    }

    // Reduce u into the fundamental rectangle centred at 0.
    fn reduce(&self, u: Complex64) -> Complex64 {
        let w3 = self.omega3.im;
        let k3 = (u.im / (2.0 * w3)).round();
        let k1 = (u.re / (2.0 * self.omega1)).round();
        Complex64::new(u.re - 2.0 * k1 * self.omega1, u.im - 2.0 * k3 * w3)
    }

    /// ℘ and ℘′ by a csc² series along the longer lattice direction.
    fn wp_pair(&self, u: Complex64) -> Result<(Complex64, Complex64)> {
        let ur = self.reduce(u);
        let margin = 1e-6 * 2.0 * self.omega1;
        if ur.norm() < margin {
            return Err(Error::PoleProximity(ur.norm()));
        }
        // rows run along a; b is the transverse half-period with |b/a| ≤ 1
        let (a, b) = if self.omega3.im >= self.omega1 {
            (self.omega3, Complex64::new(self.omega1, 0.0))
        } else {
            (Complex64::new(self.omega1, 0.0), self.omega3)
        };
        let kappa = Complex64::new(PI, 0.0) / (a * 2.0);
        let k2 = kappa * kappa;
        let csc2 = |v: Complex64| {
            let s = v.sin();
            (s * s).inv()
        };
        let mut sum_p = csc2(kappa * ur);
        let mut sum_d = {
            let v = kappa * ur;
            let s = v.sin();
            v.cos() / (s * s * s)
        };
        let mut constant = Complex64::new(-1.0 / 3.0, 0.0);
        for n in 1..400 {
            let shift = b * (2.0 * n as f64);
            let mut term = Complex64::new(0.0, 0.0);
            let mut dterm = Complex64::new(0.0, 0.0);
            for v in [kappa * (ur + shift), kappa * (ur - shift)] {
                let s = v.sin();
                term += (s * s).inv();
                dterm += v.cos() / (s * s * s);
            }
            let cterm = csc2(kappa * shift) * 2.0;
            sum_p += term;
            sum_d += dterm;
            constant -= cterm;
            if term.norm() + cterm.norm() < 1e-18 * (1.0 + sum_p.norm()) && dterm.norm() < 1e-18 * (1.0 + sum_d.norm()) {
                break;
            }
        }
        let p = k2 * (sum_p + constant);
        let dp = k2 * kappa * sum_d * (-2.0);
        Ok((p, dp))
    }

    /// ℘⁽ᵏ⁾(u) for k = order.
    pub fn wp(&self, u: Complex64, order: usize) -> Result<Complex64> {
        Ok(self.wp_derivs(u, order)?[order])
    }

    /// [℘, ℘′, …, ℘⁽ᵏ⁾] at u.
    pub fn wp_derivs(&self, u: Complex64, k: usize) -> Result<Vec<Complex64>> {
        let (p, dp) = self.wp_pair(u)?;
        let mut d = vec![p, dp];
        // ℘″ = 6℘² − g₂/2, then ℘⁽ʲ⁺²⁾ = 6 Σ C(j,i) ℘⁽ⁱ⁾℘⁽ʲ⁻ⁱ⁾
        for j in 0..k.saturating_sub(1) {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut binom = 1.0;
            for i in 0..=j {
                acc += d[i] * d[j - i] * binom;
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
            let mut next = acc * 6.0;
            if j == 0 {
                next -= self.g2 / 2.0;
            }
            d.push(next);
        }
        d.truncate(k + 1);
        Ok(d)
    }

    /// ℘ and derivatives at t + ω₃ (real-valued for real t).
    pub fn wp_line(&self, t: f64, k: usize) -> Result<Vec<f64>> {
        Ok(self
            .wp_derivs(Complex64::new(t, 0.0) + self.omega3, k)?
            .into_iter()
            .map(|v| v.re)
            .collect())
    }

    /// Max |Im| of ℘ on the line t + ω₃ over the given samples (should vanish).
    pub fn line_imag_defect(&self, ts: &[f64]) -> f64 {
        ts.iter()
            .filter_map(|&t| self.wp(Complex64::new(t, 0.0) + self.omega3, 0).ok())
            .map(|v| v.im.abs())
            .fold(0.0, f64::max)
    }
}

/// Lamé curve for a one-gap spectrum: eⱼ = s − Eⱼ₋₁ with s = (E₀+E₁+E₂)/3.
pub fn curve_from_bands(b: &BandStructure) -> Result<EllipticCurve> {
    if b.n() != 1 {
        return Err(Error::Invalid(format!("one-gap curve needs 3 edges, got {}", b.edges().len())));
    }
    let (e0, e1, e2) = (b.e(0), b.e(1), b.e(2));
    if e2 - e1 <= 1e-12 * (1.0 + e2.abs()) || e1 - e0 <= 1e-12 * (1.0 + e1.abs()) {
        return Err(Error::DegenerateGap(e1, e2));
    }
    let s = (e0 + e1 + e2) / 3.0;
    // subtract the mean again so the roots sum to zero exactly in floating point
    let (r1, r2, r3) = (s - e0, s - e1, s - e2);
    let mean = (r1 + r2 + r3) / 3.0;
    let mut c = EllipticCurve::from_roots(r1 - mean, r2 - mean, r3 - mean)?;
    c.s = s + mean;
    Ok(c)
}
