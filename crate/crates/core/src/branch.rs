//! The spectrum Σ = [E₀,E₁] ∪ … ∪ [E₂ₙ,∞) and the square root of
//! R(z) = Π (z − Eₗ) on the two-sheeted cut plane.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which boundary value to take on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BandStructure {
    edges: Vec<f64>,
}

impl TryFrom<Vec<f64>> for BandStructure {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        BandStructure::new(v)
    }
}

impl From<BandStructure> for Vec<f64> {
    fn from(b: BandStructure) -> Vec<f64> {
        b.edges
    }
}

impl BandStructure {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        let ok = edges.len() % 2 == 1
            && edges.iter().all(|e| e.is_finite())
            && edges.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidBands(edges));
        }
        Ok(BandStructure { edges })
    }

    pub fn n(&self) -> usize {
        self.edges.len() / 2
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn e(&self, l: usize) -> f64 {
        self.edges[l]
    }

    pub fn bottom(&self) -> f64 {
        self.edges[0]
    }

    pub fn top(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    /// [E₀,E₁], …, [E₂ₙ₋₂,E₂ₙ₋₁], [E₂ₙ,∞).
    pub fn bands(&self) -> Vec<(f64, f64)> {
        let n = self.n();
        let mut out: Vec<(f64, f64)> = (0..n)
            .map(|j| (self.edges[2 * j], self.edges[2 * j + 1]))
            .collect();
        out.push((self.edges[2 * n], f64::INFINITY));
        out
    }

    /// Open gaps (E₂ⱼ₋₁, E₂ⱼ), j = 1..n.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        (1..=self.n())
            .map(|j| (self.edges[2 * j - 1], self.edges[2 * j]))
            .collect()
    }

    pub fn in_spectrum(&self, lambda: f64) -> bool {
        self.bands()
            .iter()
            .any(|&(a, b)| lambda >= a && lambda <= b)
    }

    /// Index j ≥ 1 of the closed gap containing λ.
    pub fn gap_of(&self, lambda: f64) -> Option<usize> {
        self.gaps()
            .iter()
            .position(|&(a, b)| lambda >= a && lambda <= b)
            .map(|k| k + 1)
    }

    pub fn sum(&self) -> f64 {
        self.edges.iter().sum()
    }

    pub fn shifted(&self, s: f64) -> BandStructure {
        BandStructure {
            edges: self.edges.iter().map(|e| e + s).collect(),
        }
    }

    /// Coefficients of R, lowest power first (monic, degree 2n+1).
    pub fn r_coeffs(&self) -> Vec<f64> {
        let mut p = vec![1.0];
        for &e in &self.edges {
            let mut next = vec![0.0; p.len() + 1];
            for (k, &a) in p.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= e * a;
            }
            p = next;
        }
        p
    }

    pub fn eval_r(&self, z: Complex64) -> Complex64 {
        self.edges
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &e| acc * (z - e))
    }

    /// R^{1/2} with ℂ₊ boundary values on the real axis.
    pub fn sqrt_r(&self, z: Complex64) -> Complex64 {
        if z.im < 0.0 {
            -self.upper(z.conj()).conj()
        } else {
            self.upper(Complex64::new(z.re, 0.0f64.max(z.im)))
        }
    }

    /// Boundary value from the requested side for real λ, ordinary value off the axis.
    pub fn sqrt_r_side(&self, z: Complex64, side: Side) -> Complex64 {
        if z.im != 0.0 {
            return self.sqrt_r(z);
        }
        match side {
            Side::Upper => self.upper(z),
            Side::Lower => -self.upper(z).conj(),
        }
    }

    /// Like [`Self::sqrt_r`] but refuses real points inside Σ.
    pub fn sqrt_r_strict(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 && self.in_spectrum(z.re) {
            return Err(Error::OnCut(z.re));
        }
        Ok(self.sqrt_r(z))
    }

    fn upper(&self, z: Complex64) -> Complex64 {
        let mut log_sum = Complex64::new(0.0, 0.0);
        for &e in &self.edges {
            let w = z - e;
            // +0 imaginary part selects the ℂ₊ side of the principal cut
            let im = if w.im == 0.0 { 0.0 } else { w.im };
            log_sum += Complex64::new(w.norm().ln(), im.atan2(w.re));
        }
        (log_sum * 0.5).exp()
    }

    /// R^{1/2}(z) = sign · zⁿ · √z · (1 + s), with s returned accurately for large |z|.
    pub fn high_energy_factor(&self, z: Complex64) -> (f64, Complex64) {
        let w = z.inv();
        let mut half_log = Complex64::new(0.0, 0.0);
        for &e in &self.edges {
            half_log += log1p(-w * e);
        }
        let s = expm1(half_log * 0.5);
        let sign = if z.im < 0.0 { -1.0 } else { 1.0 };
        (sign, s)
    }

    /// Π_{l∉{2j,2j+1}} |λ − Eₗ| for the finite band j (weight that remains after the
    /// inverse-square-root edge factors are split off).
    pub fn band_weight(&self, j: usize, lambda: f64) -> f64 {
        self.edges
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != 2 * j && l != 2 * j + 1)
            .map(|(_, &e)| (lambda - e).abs())
            .product()
    }

    /// Sign σ with R^{1/2}(λ + i0) = σ·|R(λ)|^{1/2} on the open band j (j = n is the half-line).
    pub fn band_sign(&self, j: usize) -> f64 {
        if (self.n() + j) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// ln(1 + x) without cancellation for small x.
pub fn log1p(x: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * x.re + x.norm_sqr()).ln_1p();
    let im = x.im.atan2(1.0 + x.re);
    Complex64::new(re, im)
}

/// eˣ − 1 without cancellation for small x.
pub fn expm1(x: Complex64) -> Complex64 {
    let em = x.re.exp_m1();
    let half = (0.5 * x.im).sin();
    let re = em * x.im.cos() - 2.0 * half * half;
    let im = x.re.exp() * x.im.sin();
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b012() -> BandStructure {
        BandStructure::new(vec![0.0, 1.0, 2.0]).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn r_values() {
        let b = b012();
        assert_eq!(b.eval_r(Complex64::new(3.0, 0.0)), Complex64::new(6.0, 0.0));
        assert_eq!(b.eval_r(Complex64::new(0.5, 0.0)), Complex64::new(0.375, 0.0));
        let b0 = BandStructure::new(vec![-2.0]).unwrap();
        assert_eq!(b0.eval_r(Complex64::new(-2.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(BandStructure::new(vec![0.0, 1.0]).is_err());
        assert!(BandStructure::new(vec![1.0, 0.0, 2.0]).is_err());
        assert!(BandStructure::new(vec![]).is_err());
    }

    #[test]
    fn bands_and_gaps() {
        let b = b012();
        assert_eq!(b.bands(), vec![(0.0, 1.0), (2.0, f64::INFINITY)]);
        assert_eq!(b.gaps(), vec![(1.0, 2.0)]);
        assert_eq!(b.gap_of(1.5), Some(1));
        assert_eq!(b.gap_of(0.5), None);
    }

    #[test]
    fn sign_table_rows() {
        let b = b012();
        let s6 = 6f64.sqrt();
        let s = 0.375f64.sqrt();
        assert!(close(b.sqrt_r(Complex64::new(3.0, 0.0)), Complex64::new(s6, 0.0), 1e-14));
        assert!(close(b.sqrt_r(Complex64::new(-1.0, 0.0)), Complex64::new(0.0, -s6), 1e-14));
        assert!(close(b.sqrt_r(Complex64::new(0.5, 0.0)), Complex64::new(-s, 0.0), 1e-14));
        assert!(close(b.sqrt_r(Complex64::new(1.5, 0.0)), Complex64::new(0.0, s), 1e-14));
    }

    #[test]
    fn lower_side_and_strict() {
        let b = b012();
        let up = b.sqrt_r_side(Complex64::new(0.5, 0.0), Side::Upper);
        let lo = b.sqrt_r_side(Complex64::new(0.5, 0.0), Side::Lower);
        assert!(close(up, -lo, 1e-15));
        assert!(matches!(b.sqrt_r_strict(Complex64::new(0.5, 0.0)), Err(Error::OnCut(_))));
        assert!(b.sqrt_r_strict(Complex64::new(1.5, 0.0)).is_ok());
    }

    // Every row of the real-axis table, for several n.
    #[test]
    fn sign_table_all_intervals() {
        for edges in [vec![-1.0], vec![0.0, 1.0, 2.0], vec![-3.0, -1.0, 0.5, 2.0, 4.0]] {
            let b = BandStructure::new(edges.clone()).unwrap();
            let n = b.n() as i32;
            let check = |lam: f64, expect: Complex64| {
                let got = b.sqrt_r(Complex64::new(lam, 0.0));
                let mag = b.eval_r(Complex64::new(lam, 0.0)).norm().sqrt();
                assert!(close(got, expect * mag, 1e-13), "λ={lam}: {got} vs {}", expect * mag);
            };
            let i = Complex64::new(0.0, 1.0);
            check(edges[0] - 0.7, i * (-1f64).powi(n));
            for j in 0..b.n() {
                let (a, c) = (edges[2 * j], edges[2 * j + 1]);
                check(0.3 * a + 0.7 * c, Complex64::new((-1f64).powi(n + j as i32), 0.0));
            }
            for j in 1..=b.n() {
                let (a, c) = (edges[2 * j - 1], edges[2 * j]);
                check(0.6 * a + 0.4 * c, i * (-1f64).powi(n + j as i32));
            }
            check(edges[2 * b.n()] + 1.3, Complex64::new(1.0, 0.0));
            for j in 0..=b.n() {
                let lam = if j < b.n() {
                    0.5 * (edges[2 * j] + edges[2 * j + 1])
                } else {
                    edges[2 * j] + 2.0
                };
                check(lam, Complex64::new(b.band_sign(j), 0.0));
            }
        }
    }

    #[test]
    fn continuity_on_circles() {
        let b = b012();
        for (cx, r) in [(0.5, 0.3), (1.5, 0.4), (3.0, 2.5)] {
            let k = 4000;
            let pts: Vec<Complex64> = (0..=k)
                .map(|t| {
                    let th = std::f64::consts::PI * (0.01 + 0.98 * t as f64 / k as f64);
                    Complex64::new(cx + r * th.cos(), 0.05 + r * th.sin())
                })
                .collect();
            let vals: Vec<Complex64> = pts.iter().map(|&z| b.sqrt_r(z)).collect();
            let max_jump = vals.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
            assert!(max_jump < 0.05, "jump {max_jump}");
        }
    }

    #[test]
    fn high_energy_factor_matches() {
        let b = BandStructure::new(vec![-3.0, -1.0, 0.5, 2.0, 4.0]).unwrap();
        for z in [Complex64::new(3.0, 50.0), Complex64::new(-40.0, -7.0), Complex64::new(0.0, 1e5)] {
            let (sg, s) = b.high_energy_factor(z);
            let rebuilt = z.powi(b.n() as i32) * z.sqrt() * (1.0 + s) * sg;
            assert!(close(rebuilt, b.sqrt_r(z), 1e-13));
        }
        let (_, s) = b.high_energy_factor(Complex64::new(0.0, 1e12));
        // s ≈ −½ ΣE / z
        let expect = Complex64::new(0.0, 1e12).inv() * (-0.5 * b.sum());
        assert!((s - expect).norm() < 1e-6 * expect.norm());
    }

    #[test]
    fn r_coeffs_match_product() {
        let b = BandStructure::new(vec![-3.0, -1.0, 0.5]).unwrap();
        let c = b.r_coeffs();
        let z = Complex64::new(0.3, -1.2);
        let horner = c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a);
        assert!(close(horner, b.eval_r(z), 1e-14));
    }

    #[test]
    fn conjugation_symmetry_bulk() {
        let b = BandStructure::new(vec![-2.0, -0.5, 0.0, 1.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let z = Complex64::new(rng.random_range(-6.0..6.0), rng.random_range(1e-3..6.0));
            let lhs = b.sqrt_r(z.conj()).conj();
            assert!(close(lhs, -b.sqrt_r(z), 1e-13));
        }
    }

    proptest! {
        #[test]
        fn square_consistency(re in -10.0f64..10.0, im in -10.0f64..10.0) {
            let b = BandStructure::new(vec![-2.0, -0.5, 0.0, 1.0, 3.0]).unwrap();
            let z = Complex64::new(re, im);
            let s = b.sqrt_r(z);
            let r = b.eval_r(z);
            prop_assert!((s * s - r).norm() <= 1e-13 * (1.0 + r.norm()));
        }

        #[test]
        fn reflection_symmetry(re in -10.0f64..10.0, im in 1e-6f64..10.0) {
            let b = BandStructure::new(vec![0.0, 1.0, 2.0]).unwrap();
            let z = Complex64::new(re, im);
            let lhs = b.sqrt_r(z.conj()).conj();
            prop_assert!((lhs + b.sqrt_r(z)).norm() <= 1e-13 * (1.0 + lhs.norm()));
        }
    }
}
