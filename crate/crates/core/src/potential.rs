//! Closed-form potentials: constant (one band) and elliptic (two bands).

use num_complex::Complex64;
use serde::Serialize;

use crate::branch::BandStructure;
use crate::elliptic::{curve_from_bands, EllipticCurve};
use crate::error::{Error, Result};
use crate::linalg::{self, cr, eye, fnorm, herm_eig, CMatrix};
use crate::pencil::{MatrixPencil, PencilQuadruple};
use crate::weyl::{Divisor, DivisorPoint};

/// An m×m Hermitian potential with derivatives available pointwise.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    /// [Q, Q′, …, Q⁽ᵏ⁾] at x.
    fn derivs(&self, x: f64, k: usize) -> Result<Vec<CMatrix>>;

    fn value(&self, x: f64) -> CMatrix {
        self.derivs(x, 0)
            .map(|mut v| v.swap_remove(0))
            .unwrap_or_else(|_| CMatrix::from_element(self.dim(), self.dim(), cr(f64::NAN)))
    }
}

#[derive(Debug, Clone)]
pub struct ConstantPotential {
    pub q: CMatrix,
}

impl Potential for ConstantPotential {
    fn dim(&self) -> usize {
        self.q.nrows()
    }

    fn derivs(&self, _x: f64, k: usize) -> Result<Vec<CMatrix>> {
        let m = self.dim();
        let mut v = vec![self.q.clone()];
        v.extend((0..k).map(|_| CMatrix::zeros(m, m)));
        Ok(v)
    }
}

#[derive(Debug, Clone)]
pub struct HochstadtSpec {
    pub bands: BandStructure,
    pub alphas: Vec<f64>,
    pub u: CMatrix,
}

impl HochstadtSpec {
    pub fn new(bands: BandStructure, alphas: Vec<f64>, u: CMatrix) -> Result<Self> {
        if bands.n() != 1 {
            return Err(Error::Invalid("elliptic family needs exactly one gap".into()));
        }
        if u.nrows() != alphas.len() || u.ncols() != alphas.len() {
            return Err(Error::DimMismatch {
                left: alphas.len(),
                right: u.nrows(),
            });
        }
        let defect = linalg::unitary_defect(&u);
        if defect > 1e-12 {
            return Err(Error::Invalid(format!("U is not unitary (defect {defect:.3e})")));
        }
        Ok(HochstadtSpec { bands, alphas, u })
    }

    pub fn scalar(bands: BandStructure, alpha: f64) -> Result<Self> {
        HochstadtSpec::new(bands, vec![alpha], eye(1))
    }
}

/// Q(x) = s·I + 2U diag(℘(x+ω₃+αⱼ)) U*.
#[derive(Debug, Clone)]
pub struct HochstadtPotential {
    pub spec: HochstadtSpec,
    pub curve: EllipticCurve,
}

impl HochstadtPotential {
    pub fn new(spec: HochstadtSpec) -> Result<Self> {
        let curve = curve_from_bands(&spec.bands)?;
        Ok(HochstadtPotential { spec, curve })
    }

    pub fn period(&self) -> f64 {
        self.curve.period()
    }

    /// Diagonal channel values qⱼ⁽ⁱ⁾(x), i ≤ k.
    pub fn channels(&self, x: f64, k: usize) -> Result<Vec<Vec<f64>>> {
        self.spec
            .alphas
            .iter()
            .map(|&a| hochstadt_scalar_with(&self.curve, x, a, k))
            .collect()
    }
}

impl Potential for HochstadtPotential {
    fn dim(&self) -> usize {
        self.spec.alphas.len()
    }

    fn derivs(&self, x: f64, k: usize) -> Result<Vec<CMatrix>> {
        let ch = self.channels(x, k)?;
        let u = &self.spec.u;
        Ok((0..=k)
            .map(|i| {
                let d: Vec<f64> = ch.iter().map(|c| c[i]).collect();
                u * linalg::from_real_diag(&d) * u.adjoint()
            })
            .collect())
    }
}

/// q⁽ⁱ⁾(x), i ≤ k, for q = s + 2℘(x + ω₃ + α).
pub fn hochstadt_scalar_with(curve: &EllipticCurve, x: f64, alpha: f64, k: usize) -> Result<Vec<f64>> {
    let mut d = curve.wp_line(x + alpha, k)?;
    for v in d.iter_mut() {
        *v *= 2.0;
    }
    d[0] += curve.s;
    Ok(d)
}

/// (q, q′, q″, q‴) at x.
pub fn hochstadt_scalar(x: f64, alpha: f64, b: &BandStructure) -> Result<[f64; 4]> {
    let c = curve_from_bands(b)?;
    let d = hochstadt_scalar_with(&c, x, alpha, 3)?;
    Ok([d[0], d[1], d[2], d[3]])
}

/// Q + amp·sin(freq·x)·D: a smooth non-reflectionless control.
pub struct PerturbedPotential<P: Potential> {
    pub base: P,
    pub amp: f64,
    pub freq: f64,
    pub direction: CMatrix,
}

impl<P: Potential> Potential for PerturbedPotential<P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn derivs(&self, x: f64, k: usize) -> Result<Vec<CMatrix>> {
        let mut d = self.base.derivs(x, k)?;
        for (i, v) in d.iter_mut().enumerate() {
            // i-th derivative of sin(ωx) is ωⁱ sin(ωx + iπ/2)
            let s = self.amp * self.freq.powi(i as i32) * (self.freq * x + i as f64 * std::f64::consts::FRAC_PI_2).sin();
            *v += &self.direction * cr(s);
        }
        Ok(d)
    }
}

/// Potential given by a closure returning derivative stacks.
pub struct FnPotential<F> {
    pub m: usize,
    pub f: F,
}

impl<F> Potential for FnPotential<F>
where
    F: Fn(f64, usize) -> Vec<CMatrix> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.m
    }

    fn derivs(&self, x: f64, k: usize) -> Result<Vec<CMatrix>> {
        Ok((self.f)(x, k))
    }
}

/// Q and its first three derivatives on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialProfile {
    pub xs: Vec<f64>,
    #[serde(skip)]
    pub q: Vec<CMatrix>,
    #[serde(skip)]
    pub qp: Vec<CMatrix>,
    #[serde(skip)]
    pub qpp: Vec<CMatrix>,
    #[serde(skip)]
    pub qppp: Vec<CMatrix>,
}

impl PotentialProfile {
    pub fn sample(p: &dyn Potential, xs: &[f64]) -> Result<Self> {
        let mut out = PotentialProfile {
            xs: xs.to_vec(),
            q: Vec::with_capacity(xs.len()),
            qp: Vec::with_capacity(xs.len()),
            qpp: Vec::with_capacity(xs.len()),
            qppp: Vec::with_capacity(xs.len()),
        };
        for &x in xs {
            let d = p.derivs(x, 3)?;
            let mut it = d.into_iter();
            out.q.push(it.next().unwrap());
            out.qp.push(it.next().unwrap());
            out.qpp.push(it.next().unwrap());
            out.qppp.push(it.next().unwrap());
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.q.first().map(|a| a.nrows()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn max_hermitian_defect(&self) -> f64 {
        self.q
            .iter()
            .chain(&self.qp)
            .chain(&self.qpp)
            .chain(&self.qppp)
            .map(linalg::hermitian_defect)
            .fold(0.0, f64::max)
    }

    /// Max ‖centered difference of Q − Q′‖ over interior points of a uniform grid.
    pub fn derivative_consistency(&self) -> f64 {
        let n = self.len();
        (1..n.saturating_sub(1))
            .map(|i| {
                let h = self.xs[i + 1] - self.xs[i - 1];
                let fd = (&self.q[i + 1] - &self.q[i - 1]) / cr(h);
                fnorm(&(fd - &self.qp[i]))
            })
            .fold(0.0, f64::max)
    }
}

/// Quintic Hermite interpolation of a sampled profile (uses Q, Q′, Q″ at the nodes).
#[derive(Debug, Clone)]
pub struct SampledPotential {
    pub profile: PotentialProfile,
}

impl SampledPotential {
    pub fn new(profile: PotentialProfile) -> Result<Self> {
        if profile.len() < 2 || profile.xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("profile grid must be strictly increasing with ≥ 2 points".into()));
        }
        Ok(SampledPotential { profile })
    }
}

impl Potential for SampledPotential {
    fn dim(&self) -> usize {
        self.profile.dim()
    }

    fn derivs(&self, x: f64, k: usize) -> Result<Vec<CMatrix>> {
        let p = &self.profile;
        let xs = &p.xs;
        let last = xs.len() - 1;
        let i = match xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(last - 1),
            Err(0) => 0,
            Err(i) if i > last => last - 1,
            Err(i) => i - 1,
        };
        let h = xs[i + 1] - xs[i];
        let t = (x - xs[i]) / h;
        // quintic Hermite basis and derivatives in t
        let basis = |t: f64, d: usize| -> [f64; 6] {
            let t2 = t * t;
            let t3 = t2 * t;
            let t4 = t3 * t;
            let t5 = t4 * t;
            match d {
                0 => [
                    1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
                    t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
                    0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
                    10.0 * t3 - 15.0 * t4 + 6.0 * t5,
                    -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
                    0.5 * t3 - t4 + 0.5 * t5,
                ],
                1 => [
                    -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
                    1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
                    t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
                    30.0 * t2 - 60.0 * t3 + 30.0 * t4,
                    -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
                    1.5 * t2 - 4.0 * t3 + 2.5 * t4,
                ],
                2 => [
                    -60.0 * t + 180.0 * t2 - 120.0 * t3,
                    -36.0 * t + 96.0 * t2 - 60.0 * t3,
                    1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
                    60.0 * t - 180.0 * t2 + 120.0 * t3,
                    -24.0 * t + 84.0 * t2 - 60.0 * t3,
                    3.0 * t - 12.0 * t2 + 10.0 * t3,
                ],
                3 => [
                    -60.0 + 360.0 * t - 360.0 * t2,
                    -36.0 + 192.0 * t - 180.0 * t2,
                    -9.0 + 36.0 * t - 30.0 * t2,
                    60.0 - 360.0 * t + 360.0 * t2,
                    -24.0 + 168.0 * t - 180.0 * t2,
                    3.0 - 24.0 * t + 30.0 * t2,
                ],
                _ => [0.0; 6],
            }
        };
        let vals = [
            (&p.q[i], 1.0),
            (&p.qp[i], h),
            (&p.qpp[i], h * h),
            (&p.q[i + 1], 1.0),
            (&p.qp[i + 1], h),
            (&p.qpp[i + 1], h * h),
        ];
        let m = self.dim();
        Ok((0..=k)
            .map(|d| {
                let b = basis(t, d);
                let scale = h.powi(-(d as i32));
                vals.iter()
                    .zip(b.iter())
                    .fold(CMatrix::zeros(m, m), |acc, ((v, s), &w)| acc + *v * cr(w * s * scale))
            })
            .collect())
    }
}

pub fn borg_potential(e0: f64, m: usize, xs: &[f64]) -> PotentialProfile {
    let p = ConstantPotential {
        q: linalg::scalar(m, cr(e0)),
    };
    PotentialProfile::sample(&p, xs).expect("constant potential cannot fail")
}

pub fn hochstadt_matrix(spec: &HochstadtSpec, xs: &[f64]) -> Result<PotentialProfile> {
    let p = HochstadtPotential::new(spec.clone())?;
    PotentialProfile::sample(&p, xs)
}

/// c₁ = −(E₀+E₁+E₂)/2 generalised as −ΣE/2.
pub fn c1(b: &BandStructure) -> f64 {
    -0.5 * b.sum()
}

/// μₖ = −qₖ/2 − c₁ with the spectral projections of Q.
pub fn divisor_from_q1(q: &CMatrix, b: &BandStructure) -> Result<Vec<(f64, CMatrix)>> {
    let sd = herm_eig(q)?;
    let c1 = c1(b);
    let (lo, hi) = (b.e(1), b.e(2));
    let slack = 1e-9 * (1.0 + hi.abs());
    let mut out = Vec::new();
    for (&qk, pk) in sd.eigenvalues.iter().zip(sd.projections.iter()) {
        let mu = -0.5 * qk - c1;
        if mu < lo - slack || mu > hi + slack {
            return Err(Error::ZoneViolation { root: mu });
        }
        out.push((mu.clamp(lo, hi), pk.clone()));
    }
    // ascending μ
    out.reverse();
    Ok(out)
}

/// Signed divisor of the one-gap family from Q and Q′: Γₖ = |R(μₖ)|^{1/2}Pₖ, εₖ from −Q′/4.
pub fn divisor_n1(q: &CMatrix, qp: &CMatrix, b: &BandStructure) -> Result<Divisor> {
    let pts = divisor_from_q1(q, b)?;
    let g = qp * cr(-0.25);
    let mut points = Vec::new();
    for (mu, p) in pts {
        let w = b.eval_r(cr(mu)).norm().sqrt();
        let proj = (&p * &g * &p).trace().re / p.trace().re.max(1.0);
        let eps = if proj < 0.0 { -1.0 } else { 1.0 };
        points.push(DivisorPoint {
            mu,
            eps,
            gamma: p * cr(w),
        });
    }
    Ok(Divisor { points })
}

pub fn closed_form_pencils_n0(e0: f64, m: usize) -> PencilQuadruple {
    PencilQuadruple {
        f: MatrixPencil::constant(eye(m)),
        g1: MatrixPencil::zero(m),
        g2: MatrixPencil::zero(m),
        h: MatrixPencil::scalar_poly(&[-e0, 1.0], m),
        bands: BandStructure::new(vec![e0]).expect("single edge is valid"),
    }
}

/// F = zI + Q/2 + c₁I, G₁ = G₂ = −Q′/4, H = z²I + z(c₁I − Q/2) + Q″/4 − Q²/2 − c₁Q.
pub fn closed_form_pencils_n1(q: &CMatrix, qp: &CMatrix, qpp: &CMatrix, b: &BandStructure) -> PencilQuadruple {
    let m = q.nrows();
    let c1 = cr(c1(b));
    let id = eye(m);
    let f = MatrixPencil::new(vec![q * cr(0.5) + &id * c1, id.clone()]).unwrap();
    let g = MatrixPencil::constant(qp * cr(-0.25));
    let h0 = qpp * cr(0.25) - q * q * cr(0.5) - q * c1;
    let h1 = &id * c1 - q * cr(0.5);
    let h = MatrixPencil::new(vec![h0, h1, id]).unwrap();
    PencilQuadruple {
        f,
        g1: g.clone(),
        g2: g,
        h,
        bands: b.clone(),
    }
}

/// Phase α with ℘(x₀+ω₃+α) = s − μ and ℘′ sign −ε (so that −q′/4 = ε|R(μ)|^{1/2}).
pub fn alpha_from_divisor(curve: &EllipticCurve, x0: f64, mu: f64, eps: f64) -> Result<f64> {
    let target = curve.s - mu;
    if target < curve.e3 - 1e-12 || target > curve.e2 + 1e-12 {
        return Err(Error::ZoneViolation { root: mu });
    }
    let f = |t: f64| -> Result<f64> { Ok(curve.wp_line(t, 0)?[0] - target) };
    // ℘ increases from e₃ to e₂ on [0, ω₁]
    let (mut lo, mut hi) = (0.0, curve.omega1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * curve.omega1 {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let t = if eps > 0.0 { 2.0 * curve.omega1 - t } else { t };
    Ok(t - x0)
}

/// Phases and U diagonalising Q(x₀) for a one-gap matrix potential, from its divisor.
pub fn spec_from_divisor(curve: &EllipticCurve, b: &BandStructure, x0: f64, d: &Divisor) -> Result<HochstadtSpec> {
    let m = d.points.first().map(|p| p.gamma.nrows()).unwrap_or(0);
    let mut alphas = Vec::new();
    let mut cols: Vec<nalgebra::DVector<Complex64>> = Vec::new();
    for p in &d.points {
        let proj = if p.gamma.iter().any(|v| v.norm() > 0.0) {
            let w = b.eval_r(cr(p.mu)).norm().sqrt();
            &p.gamma / cr(w)
        } else {
            return Err(Error::DegenerateResidue { at: p.mu });
        };
        let sd = herm_eig(&linalg::hermitian_part(&proj))?;
        for (k, &v) in sd.values.iter().enumerate() {
            if v > 0.5 {
                cols.push(sd.vectors.column(k).clone_owned());
                alphas.push(alpha_from_divisor(curve, x0, p.mu, p.eps)?);
            }
        }
    }
    if cols.len() != m {
        return Err(Error::DimMismatch {
            left: m,
            right: cols.len(),
        });
    }
    let u = CMatrix::from_columns(&cols);
    HochstadtSpec::new(b.clone(), alphas, linalg::gram_schmidt(&u))
}
