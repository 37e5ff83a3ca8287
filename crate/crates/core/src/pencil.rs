//! Polynomial matrix pencils A(z) = Σ A_k z^k and the four-pencil ledger.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::branch::BandStructure;
use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, eye, fnorm, herm_eig, CMatrix};
use crate::poly;
use crate::weyl::Divisor;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPencil {
    coeffs: Vec<CMatrix>,
}

impl MatrixPencil {
    pub fn new(coeffs: Vec<CMatrix>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::Invalid("pencil needs at least one coefficient".into()))?;
        let m = first.nrows();
        for a in &coeffs {
            if a.nrows() != m || a.ncols() != m {
                return Err(Error::DimMismatch {
                    left: m,
                    right: a.nrows().max(a.ncols()),
                });
            }
        }
        Ok(MatrixPencil { coeffs })
    }

    pub fn zero(m: usize) -> Self {
        MatrixPencil {
            coeffs: vec![CMatrix::zeros(m, m)],
        }
    }

    pub fn constant(a: CMatrix) -> Self {
        MatrixPencil { coeffs: vec![a] }
    }

    /// p(z)·I for a real scalar polynomial p.
    pub fn scalar_poly(p: &[f64], m: usize) -> Self {
        MatrixPencil {
            coeffs: p.iter().map(|&a| linalg::scalar(m, cr(a))).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    /// Index of the last nonzero coefficient (0 for the zero pencil).
    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|a| a.iter().any(|v| *v != Complex64::new(0.0, 0.0)))
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> CMatrix {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.dim(), self.dim()))
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        let m = self.dim();
        self.coeffs
            .iter()
            .rev()
            .fold(CMatrix::zeros(m, m), |acc, a| acc * z + a)
    }

    /// The pencil z ↦ A(z̄)*.
    pub fn adjoint(&self) -> Self {
        MatrixPencil {
            coeffs: self.coeffs.iter().map(|a| a.adjoint()).collect(),
        }
    }

    pub fn self_adjoint_defect(&self) -> f64 {
        self.coeffs
            .iter()
            .map(linalg::hermitian_defect)
            .fold(0.0, f64::max)
    }

    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(fnorm).fold(0.0, f64::max)
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.self_adjoint_defect() <= tol * self.scale().max(1.0)
    }

    pub fn is_monic(&self, tol: f64) -> bool {
        let d = self.degree();
        fnorm(&(&self.coeffs[d] - eye(self.dim()))) <= tol
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        MatrixPencil {
            coeffs: (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        MatrixPencil {
            coeffs: self.coeffs.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let m = self.dim();
        let mut coeffs = vec![CMatrix::zeros(m, m); self.len() + other.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        MatrixPencil { coeffs }
    }

    /// Coefficient list trimmed to `len` entries (higher ones must be negligible).
    pub fn truncated(&self, len: usize) -> Self {
        let mut coeffs: Vec<CMatrix> = (0..len).map(|k| self.coeff(k)).collect();
        if coeffs.is_empty() {
            coeffs.push(CMatrix::zeros(self.dim(), self.dim()));
        }
        MatrixPencil { coeffs }
    }

    pub fn to_json(&self) -> PencilJson {
        PencilJson {
            dim: self.dim(),
            degree: self.len() - 1,
            coeffs: self
                .coeffs
                .iter()
                .map(|a| {
                    let m = a.nrows();
                    (0..m)
                        .flat_map(|i| (0..m).map(move |j| (i, j)))
                        .map(|(i, j)| [a[(i, j)].re, a[(i, j)].im])
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_json(j: &PencilJson) -> Result<Self> {
        if j.coeffs.len() != j.degree + 1 {
            return Err(Error::Invalid(format!(
                "pencil degree {} but {} coefficients",
                j.degree,
                j.coeffs.len()
            )));
        }
        let m = j.dim;
        let coeffs = j
            .coeffs
            .iter()
            .map(|flat| {
                if flat.len() != m * m {
                    return Err(Error::DimMismatch {
                        left: m * m,
                        right: flat.len(),
                    });
                }
                Ok(CMatrix::from_fn(m, m, |i, k| {
                    let [re, im] = flat[i * m + k];
                    c(re, im)
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        MatrixPencil::new(coeffs)
    }
}

pub fn pencil_eval(p: &MatrixPencil, z: Complex64) -> CMatrix {
    p.eval(z)
}

/// Serialized form: each coefficient is a row-major list of [re, im].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilJson {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PencilKind {
    SelfAdjoint,
    WeaklyHyperbolic,
    Hyperbolic,
    StronglyHyperbolic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub kind: PencilKind,
    /// Sampled range of the j-th ordered root (empty when roots are not all real).
    pub zones: Vec<(f64, f64)>,
    pub directions: usize,
}

impl Classification {
    pub fn zones_within(&self, intervals: &[(f64, f64)], slack: f64) -> bool {
        self.zones.len() == intervals.len()
            && self
                .zones
                .iter()
                .zip(intervals)
                .all(|(&(lo, hi), &(a, b))| lo >= a - slack && hi <= b + slack)
    }
}

/// Taxonomy and root zones from sampled directions f.
///
/// The zones are an inner approximation: the true Δⱼ contain the reported intervals.
pub fn classify(p: &MatrixPencil, samples: usize, seed: u64) -> Result<Classification> {
    let defect = p.self_adjoint_defect();
    if defect > 1e-10 * p.scale().max(1.0) {
        return Err(Error::NotSelfAdjoint(defect));
    }
    let d = p.degree();
    let m = p.dim();
    let lead = herm_eig(&linalg::hermitian_part(&p.coeffs[d]))?;
    if lead.values[0] <= 0.0 {
        return Err(Error::LeadingNotPositive);
    }

    let mut dirs: Vec<nalgebra::DVector<Complex64>> = Vec::new();
    for a in p.coeffs.iter().take(d + 1) {
        let sd = herm_eig(&linalg::hermitian_part(a))?;
        for k in 0..m {
            dirs.push(sd.vectors.column(k).clone_owned());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut f = nalgebra::DVector::<Complex64>::zeros(m);
        for v in f.iter_mut() {
            *v = c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        }
        let nrm = f.norm();
        dirs.push(f / cr(nrm));
    }

    let mut all_real = true;
    let mut distinct = true;
    let mut zones = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for f in &dirs {
        let coeffs: Vec<f64> = p.coeffs[..=d]
            .iter()
            .map(|a| f.dotc(&(a * f)).re)
            .collect();
        match poly::real_roots(&coeffs, 1e-7) {
            Some(r) => {
                let scale = r.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
                if r.windows(2).any(|w| w[1] - w[0] <= 1e-9 * scale) {
                    distinct = false;
                }
                for (j, &v) in r.iter().enumerate() {
                    zones[j].0 = zones[j].0.min(v);
                    zones[j].1 = zones[j].1.max(v);
                }
            }
            None => all_real = false,
        }
    }
    if !all_real {
        return Ok(Classification {
            kind: PencilKind::SelfAdjoint,
            zones: Vec::new(),
            directions: dirs.len(),
        });
    }
    let disjoint = zones.windows(2).all(|w| w[0].1 < w[1].0);
    let kind = match (distinct, disjoint) {
        (false, _) => PencilKind::WeaklyHyperbolic,
        (true, false) => PencilKind::Hyperbolic,
        (true, true) => PencilKind::StronglyHyperbolic,
    };
    Ok(Classification {
        kind,
        zones,
        directions: dirs.len(),
    })
}

/// F, G₁, G₂, H at a fixed x together with the band data.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilQuadruple {
    pub f: MatrixPencil,
    pub g1: MatrixPencil,
    pub g2: MatrixPencil,
    pub h: MatrixPencil,
    pub bands: BandStructure,
}

impl PencilQuadruple {
    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn n(&self) -> usize {
        self.bands.n()
    }

    pub fn eval(&self, z: Complex64) -> [CMatrix; 4] {
        [self.f.eval(z), self.g1.eval(z), self.g2.eval(z), self.h.eval(z)]
    }

    /// Same quadruple with G₁, G₂ negated (all divisor signs flipped).
    pub fn with_flipped_signs(&self) -> Self {
        PencilQuadruple {
            g1: self.g1.scaled(cr(-1.0)),
            g2: self.g2.scaled(cr(-1.0)),
            ..self.clone()
        }
    }
}

/// Maximal relative residuals of the ledger identities over a z-grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LedgerReport {
    /// G₂(z̄)* − G₁(z), plus F and H self-adjointness.
    pub symmetry: f64,
    /// F G₁ − G₂ F.
    pub fg_intertwining: f64,
    /// H G₂ − G₁ H.
    pub hg_intertwining: f64,
    /// H F − G₁² − R.
    pub hf_determinant: f64,
    /// F H − G₂² − R.
    pub fh_determinant: f64,
    pub degrees_ok: bool,
}

impl LedgerReport {
    pub fn max(&self) -> f64 {
        [
            self.symmetry,
            self.fg_intertwining,
            self.hg_intertwining,
            self.hf_determinant,
            self.fh_determinant,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.degrees_ok && self.max() <= tol
    }
}

/// Residuals are scaled by max(1, |R(z)|).
pub fn check_quadruple(q: &PencilQuadruple, zs: &[Complex64]) -> LedgerReport {
    let n = q.n();
    let m = q.dim();
    let tol = 1e-10;
    let degrees_ok = q.f.is_monic(tol)
        && q.f.degree() == n
        && q.h.is_monic(tol)
        && q.h.degree() == n + 1
        && q.g1.degree() + 1 <= n.max(1)
        && q.g2.degree() + 1 <= n.max(1);
    let mut rep = LedgerReport {
        degrees_ok,
        ..Default::default()
    };
    let id = eye(m);
    for &z in zs {
        let r = q.bands.eval_r(z);
        let scale = r.norm().max(1.0);
        let [f, g1, g2, h] = q.eval(z);
        let zb = z.conj();
        let sym = fnorm(&(q.g2.eval(zb).adjoint() - &g1))
            .max(fnorm(&(q.f.eval(zb).adjoint() - &f)))
            .max(fnorm(&(q.h.eval(zb).adjoint() - &h)));
        rep.symmetry = rep.symmetry.max(sym / scale);
        rep.fg_intertwining = rep
            .fg_intertwining
            .max(fnorm(&(&f * &g1 - &g2 * &f)) / scale);
        rep.hg_intertwining = rep
            .hg_intertwining
            .max(fnorm(&(&h * &g2 - &g1 * &h)) / scale);
        rep.hf_determinant = rep
            .hf_determinant
            .max(fnorm(&(&h * &f - &g1 * &g1 - &id * r)) / scale);
        rep.fh_determinant = rep
            .fh_determinant
            .max(fnorm(&(&f * &h - &g2 * &g2 - &id * r)) / scale);
    }
    rep
}

// Fits a polynomial of degree ≤ deg to the matrix function `eval` by sampling on a
// circle; returns the coefficients and the largest aliased (should-be-zero) one.
fn fit_on_circle<E>(eval: E, m: usize, deg: usize, center: f64, radius: f64) -> Result<(Vec<CMatrix>, f64)>
where
    E: Fn(Complex64) -> Result<CMatrix>,
{
    let nodes = 2 * (deg + 1) + 4;
    let vals: Vec<CMatrix> = (0..nodes)
        .map(|j| {
            let th = 2.0 * PI * (j as f64 + 0.5) / nodes as f64;
            eval(Complex64::new(center, 0.0) + Complex64::from_polar(radius, th))
        })
        .collect::<Result<_>>()?;
    // coefficients b_k of Σ b_k (z − center)^k
    let mut b = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let mut acc = CMatrix::zeros(m, m);
        for (j, v) in vals.iter().enumerate() {
            let th = 2.0 * PI * (j as f64 + 0.5) / nodes as f64;
            acc += v * Complex64::from_polar(1.0, -(k as f64) * th);
        }
        b.push(acc / cr(nodes as f64 * radius.powi(k as i32)));
    }
    let size = b[..=deg]
        .iter()
        .enumerate()
        .map(|(k, a)| fnorm(a) * radius.powi(k as i32))
        .fold(1.0, f64::max);
    let alias = b[deg + 1..]
        .iter()
        .enumerate()
        .map(|(k, a)| fnorm(a) * radius.powi((k + deg + 1) as i32))
        .fold(0.0, f64::max)
        / size;
    // shift to the monomial basis in z
    let mut out = vec![CMatrix::zeros(m, m); deg + 1];
    for (k, bk) in b.iter().take(deg + 1).enumerate() {
        let mut binom = 1.0;
        for i in 0..=k {
            // C(k,i) (−center)^{k−i} z^i
            out[i] += bk * cr(binom * (-center).powi((k - i) as i32));
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
    }
    Ok((out, alias))
}

fn fit_geometry(d: &Divisor, b: &BandStructure) -> (f64, f64) {
    let lo = d.points.iter().map(|p| p.mu).fold(b.bottom(), f64::min);
    let hi = d.points.iter().map(|p| p.mu).fold(b.top(), f64::max);
    (0.5 * (lo + hi), 0.5 * (hi - lo) + 1.0)
}

/// G₁ = S·F and G₂ = F·S with S(z) = Σ εₖ Γₖ / (z − μₖ).
pub fn build_g_from_f(f: &MatrixPencil, d: &Divisor, b: &BandStructure, tol: f64) -> Result<(MatrixPencil, MatrixPencil)> {
    let m = f.dim();
    let n = f.degree();
    if n == 0 {
        return Ok((MatrixPencil::zero(m), MatrixPencil::zero(m)));
    }
    // residue of S·F at each distinct μ must vanish
    let mut pole = 0.0f64;
    for p in &d.points {
        let fm = f.eval(cr(p.mu));
        let res1: CMatrix = d
            .points
            .iter()
            .filter(|q| (q.mu - p.mu).abs() <= 1e-12 * (1.0 + p.mu.abs()))
            .fold(CMatrix::zeros(m, m), |acc, q| acc + &q.gamma * cr(q.eps));
        pole = pole.max(fnorm(&(&res1 * &fm)).max(fnorm(&(&fm * &res1))));
    }
    let scale = f.scale().max(1.0) * d.points.iter().map(|p| fnorm(&p.gamma)).fold(1.0, f64::max);
    if pole > tol * scale {
        return Err(Error::NotPolynomial(pole / scale));
    }
    let (center, radius) = fit_geometry(d, b);
    let (g1, a1) = fit_on_circle(|z| Ok(d.s_eval(z, m) * f.eval(z)), m, n - 1, center, radius)?;
    let (g2, a2) = fit_on_circle(|z| Ok(f.eval(z) * d.s_eval(z, m)), m, n - 1, center, radius)?;
    let alias = a1.max(a2);
    if alias > tol {
        return Err(Error::NotPolynomial(alias));
    }
    Ok((MatrixPencil::new(g1)?, MatrixPencil::new(g2)?))
}

/// H = R·F⁻¹ + S·F·S.
pub fn build_h_from_f(f: &MatrixPencil, d: &Divisor, b: &BandStructure, tol: f64) -> Result<MatrixPencil> {
    let m = f.dim();
    let n = f.degree();
    let eval = |z: Complex64| -> Result<CMatrix> {
        let fz = f.eval(z);
        let inv = linalg::inverse(&fz).ok_or(Error::SingularF { re: z.re, im: z.im })?;
        let s = d.s_eval(z, m);
        Ok(inv * b.eval_r(z) + &s * fz * &s)
    };
    let (center, radius) = fit_geometry(d, b);
    let (coeffs, alias) = fit_on_circle(eval, m, n + 1, center, radius)?;
    if alias > tol {
        return Err(Error::NotPolynomial(alias));
    }
    let h = MatrixPencil::new(coeffs)?;
    // independent spot checks off the sampling circle
    for z in [
        Complex64::new(center, 0.6 * radius),
        Complex64::new(center + 0.3 * radius, -0.45 * radius),
    ] {
        let direct = eval(z)?;
        let rel = fnorm(&(h.eval(z) - &direct)) / fnorm(&direct).max(1.0);
        if rel > tol {
            return Err(Error::NotPolynomial(rel));
        }
    }
    Ok(h)
}

/// Full quadruple from F and a signed divisor.
pub fn quadruple_from_divisor(f: &MatrixPencil, d: &Divisor, b: &BandStructure, tol: f64) -> Result<PencilQuadruple> {
    let (g1, g2) = build_g_from_f(f, d, b, tol)?;
    let h = build_h_from_f(f, d, b, tol)?;
    Ok(PencilQuadruple {
        f: f.clone(),
        g1,
        g2,
        h,
        bands: b.clone(),
    })
}
