//! Weyl matrices M±, the 2m×2m Weyl matrix, diagonal Green's function,
//! boundary values on the real axis and Herglotz representations.

use num_complex::Complex64;
use serde::Serialize;

use crate::branch::BandStructure;
use crate::error::{Error, Result};
use crate::linalg::{self, block, block2, c, cr, eye, fnorm, herm_eig, CMatrix, I};
use crate::pencil::{MatrixPencil, PencilQuadruple};
use crate::poly;
use crate::quadrature;

/// One divisor point: gap position μ, sign ε, weight Γ ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisorPoint {
    pub mu: f64,
    pub eps: f64,
    pub gamma: CMatrix,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Divisor {
    pub points: Vec<DivisorPoint>,
}

impl Divisor {
    /// S(z) = Σ εₖ Γₖ / (z − μₖ).
    pub fn s_eval(&self, z: Complex64, m: usize) -> CMatrix {
        self.points
            .iter()
            .fold(CMatrix::zeros(m, m), |acc, p| acc + &p.gamma * (cr(p.eps) / (z - p.mu)))
    }

    pub fn with_signs(mut self, signs: &[f64]) -> Self {
        for (p, &s) in self.points.iter_mut().zip(signs) {
            p.eps = s;
        }
        self
    }

    pub fn flipped(&self) -> Self {
        let mut d = self.clone();
        for p in d.points.iter_mut() {
            p.eps = -p.eps;
        }
        d
    }

    pub fn total_rank(&self) -> usize {
        self.points
            .iter()
            .map(|p| p.gamma.trace().re.max(0.0))
            .map(|t| if t > 0.0 { 1 } else { 0 })
            .sum()
    }
}

// number of negative eigenvalues of the Hermitian matrix F(λ)
fn negative_count(f: &MatrixPencil, lambda: f64) -> Result<usize> {
    let a = linalg::hermitian_part(&f.eval(cr(lambda)));
    Ok(herm_eig(&a)?.values.iter().filter(|&&v| v < 0.0).count())
}

/// Points μ where F(μ) is singular (m per gap) with weights Γ = −i·Res(R^{1/2}F⁻¹).
/// Signs are left at +1.
pub fn gamma_extract(f: &MatrixPencil, b: &BandStructure) -> Result<Divisor> {
    let m = f.dim();
    let mut roots: Vec<f64> = Vec::new();
    for (lo, hi) in b.gaps() {
        let delta = 1e-9 * (1.0 + lo.abs().max(hi.abs())).min(hi - lo);
        let (a, bb) = (lo - delta, hi + delta);
        let n_a = negative_count(f, a)?;
        let n_b = negative_count(f, bb)?;
        let change = (n_b as i64 - n_a as i64).unsigned_abs() as usize;
        if change != m {
            // locate an offending point for the error message
            let root = if negative_count(f, b.bottom() - 1.0)? != negative_count(f, lo)? {
                b.bottom()
            } else {
                lo
            };
            return Err(Error::ZoneViolation { root });
        }
        let crossed = |lam: f64| -> Result<usize> {
            Ok((negative_count(f, lam)? as i64 - n_a as i64).unsigned_abs() as usize)
        };
        for k in 1..=m {
            let (mut x0, mut x1) = (a, bb);
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                if crossed(mid)? >= k {
                    x1 = mid;
                } else {
                    x0 = mid;
                }
                if x1 - x0 <= 4.0 * f64::EPSILON * (1.0 + mid.abs()) {
                    break;
                }
            }
            roots.push((0.5 * (x0 + x1)).clamp(lo, hi));
        }
    }
    // cluster coincident roots
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for r in roots {
        match clusters.last_mut() {
            Some((c0, cnt)) if (r - *c0).abs() <= 1e-10 * (1.0 + r.abs()) => {
                *c0 = (*c0 * *cnt as f64 + r) / (*cnt + 1) as f64;
                *cnt += 1;
            }
            _ => clusters.push((r, 1)),
        }
    }
    let mut points = Vec::new();
    for (idx, &(mu, _)) in clusters.iter().enumerate() {
        let sq = b.sqrt_r(cr(mu));
        if sq.norm() == 0.0 {
            points.push(DivisorPoint {
                mu,
                eps: 1.0,
                gamma: CMatrix::zeros(m, m),
            });
            continue;
        }
        let mut radius = f64::INFINITY;
        for (j, &(other, _)) in clusters.iter().enumerate() {
            if j != idx {
                radius = radius.min(0.5 * (other - mu).abs());
            }
        }
        // stay away from the gap edges as well (R^{1/2} branch points)
        let (lo, hi) = b.gaps()[b.gap_of(mu).unwrap_or(1) - 1];
        radius = radius.min(0.5 * (mu - lo)).min(0.5 * (hi - mu)).min(1.0);
        if !(radius > 1e-10 * (1.0 + mu.abs())) {
            return Err(Error::DegenerateResidue { at: mu });
        }
        let res = contour_residue(|z| b.sqrt_r(z) * I * (-1.0), f, mu, radius)?;
        let gamma = linalg::hermitian_part(&res);
        points.push(DivisorPoint { mu, eps: 1.0, gamma });
    }
    Ok(Divisor { points })
}

// (1/2πi)∮ w(z) F(z)⁻¹ dz on a circle, trapezoidal rule.
fn contour_residue<W: Fn(Complex64) -> Complex64>(w: W, f: &MatrixPencil, mu: f64, r: f64) -> Result<CMatrix> {
    let m = f.dim();
    let mut prev: Option<CMatrix> = None;
    let mut n = 64;
    while n <= 4096 {
        let mut acc = CMatrix::zeros(m, m);
        for k in 0..n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let dz = Complex64::from_polar(r, th);
            let z = cr(mu) + dz;
            let inv = linalg::inverse(&f.eval(z)).ok_or(Error::DegenerateResidue { at: mu })?;
            acc += inv * (w(z) * dz);
        }
        acc /= cr(n as f64);
        if let Some(p) = &prev {
            if fnorm(&(&acc - p)) <= 1e-13 * fnorm(&acc).max(1.0) {
                return Ok(acc);
            }
        }
        prev = Some(acc);
        n *= 2;
    }
    Err(Error::DegenerateResidue { at: mu })
}

fn checked_inverse(a: &CMatrix, z: Complex64) -> Result<CMatrix> {
    let inv = linalg::inverse(a).ok_or(Error::SingularF { re: z.re, im: z.im })?;
    if fnorm(&inv) * fnorm(a) > 1e14 || inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularF { re: z.re, im: z.im });
    }
    Ok(inv)
}

/// M± = ±iR^{1/2}F⁻¹ − G₁F⁻¹.
pub fn weyl_m(f: &MatrixPencil, g1: &MatrixPencil, b: &BandStructure, z: Complex64, sign: f64) -> Result<CMatrix> {
    let fz = f.eval(z);
    let inv = checked_inverse(&fz, z)?;
    let m = f.dim();
    let s = b.sqrt_r(z) * I * sign;
    Ok((eye(m) * s - g1.eval(z)) * inv)
}

/// M± = F⁻¹(±iR^{1/2} − G₂).
pub fn weyl_m_right(f: &MatrixPencil, g2: &MatrixPencil, b: &BandStructure, z: Complex64, sign: f64) -> Result<CMatrix> {
    let inv = checked_inverse(&f.eval(z), z)?;
    let s = b.sqrt_r(z) * I * sign;
    Ok(&inv * (eye(f.dim()) * s - g2.eval(z)))
}

/// Evaluators bound to one quadruple.
#[derive(Debug, Clone)]
pub struct WeylData {
    pub quad: PencilQuadruple,
}

/// (𝔥, g₁, g₂, g): blocks of the 2m×2m Weyl matrix [[𝔥, −g₂], [−g₁, g]].
#[derive(Debug, Clone)]
pub struct WeylBlocks {
    pub h: CMatrix,
    pub g1: CMatrix,
    pub g2: CMatrix,
    pub g: CMatrix,
}

impl WeylData {
    pub fn new(quad: PencilQuadruple) -> Self {
        WeylData { quad }
    }

    pub fn dim(&self) -> usize {
        self.quad.dim()
    }

    pub fn bands(&self) -> &BandStructure {
        &self.quad.bands
    }

    pub fn m(&self, z: Complex64, sign: f64) -> Result<CMatrix> {
        weyl_m(&self.quad.f, &self.quad.g1, &self.quad.bands, z, sign)
    }

    pub fn m_right(&self, z: Complex64, sign: f64) -> Result<CMatrix> {
        weyl_m_right(&self.quad.f, &self.quad.g2, &self.quad.bands, z, sign)
    }

    pub fn m_plus(&self, z: Complex64) -> Result<CMatrix> {
        self.m(z, 1.0)
    }

    pub fn m_minus(&self, z: Complex64) -> Result<CMatrix> {
        self.m(z, -1.0)
    }

    /// M± ∓ i√z·I computed without cancellation at large |z|.
    pub fn m_tail(&self, z: Complex64, sign: f64) -> Result<CMatrix> {
        let q = &self.quad;
        let n = q.n();
        let m = q.dim();
        let w = z.inv();
        let (sg, s) = q.bands.high_energy_factor(z);
        // A(w) = z⁻ⁿF(z) = I + Σ_{ℓ<n} F_ℓ w^{n−ℓ}
        let mut lower = CMatrix::zeros(m, m);
        for l in 0..n {
            lower += q.f.coeff(l) * w.powi((n - l) as i32);
        }
        let a = eye(m) + &lower;
        let a_inv = checked_inverse(&a, z)?;
        let fz_inv = &a_inv * w.powi(n as i32);
        let rz = z.sqrt();
        // sg·(1+s)·A⁻¹ − I = [(sg(1+s) − 1)I − A + I]A⁻¹
        let head = eye(m) * (cr(sg) * (cr(1.0) + s) - 1.0) - lower;
        Ok(head * &a_inv * (I * rz * sign) - q.g1.eval(z) * fz_inv)
    }

    /// (i / 2R^{1/2}) [[H, −G₂], [−G₁, F]].
    pub fn full(&self, z: Complex64) -> Result<CMatrix> {
        let bl = self.blocks(z)?;
        Ok(block2(&bl.h, &(-&bl.g2), &(-&bl.g1), &bl.g))
    }

    pub fn blocks(&self, z: Complex64) -> Result<WeylBlocks> {
        let sq = self.quad.bands.sqrt_r(z);
        if sq.norm() == 0.0 {
            return Err(Error::OnCut(z.re));
        }
        let pre = I / (sq * 2.0);
        let [f, g1, g2, h] = self.quad.eval(z);
        Ok(WeylBlocks {
            h: h * pre,
            g1: g1 * pre,
            g2: g2 * pre,
            g: f * pre,
        })
    }

    /// g(z) = (i/2) R^{-1/2} F(z).
    pub fn green(&self, z: Complex64) -> Result<CMatrix> {
        Ok(self.blocks(z)?.g)
    }
}

pub fn full_m(q: &PencilQuadruple, z: Complex64) -> Result<CMatrix> {
    WeylData::new(q.clone()).full(z)
}

pub fn green_diag(q: &PencilQuadruple, z: Complex64) -> Result<CMatrix> {
    WeylData::new(q.clone()).green(z)
}

/// g = (M₋ − M₊)⁻¹.
pub fn green_from_m(mp: &CMatrix, mm: &CMatrix, z: Complex64) -> Result<CMatrix> {
    let d = mm - mp;
    let inv = linalg::inverse(&d).ok_or(Error::SingularDifference { re: z.re, im: z.im })?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularDifference { re: z.re, im: z.im });
    }
    Ok(inv)
}

/// The 2m×2m Weyl matrix assembled from the half-line matrices.
pub fn full_m_from_half_lines(mp: &CMatrix, mm: &CMatrix, z: Complex64) -> Result<CMatrix> {
    let n_minus = mm - mp;
    let n_plus = mm + mp;
    let inv = green_from_m(mp, mm, z)?;
    let a11 = mp * &inv * mm;
    let a12 = &inv * &n_plus * cr(0.5);
    let a21 = &n_plus * &inv * cr(0.5);
    let _ = n_minus;
    Ok(block2(&a11, &a12, &a21, &inv))
}

/// Blocks (𝔥, g₁, g₂, g) of a 2m×2m Weyl matrix.
pub fn split_blocks(full: &CMatrix) -> WeylBlocks {
    WeylBlocks {
        h: block(full, 0, 0),
        g2: -block(full, 0, 1),
        g1: -block(full, 1, 0),
        g: block(full, 1, 1),
    }
}

/// Residuals of the block identities relating 𝔥, g₁, g₂, g and M±.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BlockIdentityReport {
    pub symmetry: f64,
    pub intertwining: f64,
    pub determinant: f64,
    pub reconstruction: f64,
    pub assembly: f64,
}

impl BlockIdentityReport {
    pub fn max(&self) -> f64 {
        [self.symmetry, self.intertwining, self.determinant, self.reconstruction, self.assembly]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn check_block_identities(w: &WeylData, zs: &[Complex64]) -> Result<BlockIdentityReport> {
    let m = w.dim();
    let mut rep = BlockIdentityReport::default();
    let quarter = eye(m) * cr(0.25);
    for &z in zs {
        let b = w.blocks(z)?;
        let bc = w.blocks(z.conj())?;
        let scale = fnorm(&b.h).max(fnorm(&b.g)).max(1.0);
        rep.symmetry = rep.symmetry.max(
            (fnorm(&(bc.g.adjoint() - &b.g)) + fnorm(&(bc.g2.adjoint() - &b.g1)) + fnorm(&(bc.h.adjoint() - &b.h))) / scale,
        );
        rep.intertwining = rep
            .intertwining
            .max((fnorm(&(&b.g * &b.g1 - &b.g2 * &b.g)) + fnorm(&(&b.h * &b.g2 - &b.g1 * &b.h))) / (scale * scale));
        rep.determinant = rep.determinant.max(
            fnorm(&(&b.g * &b.h - &b.g2 * &b.g2 + &quarter))
                .max(fnorm(&(&b.h * &b.g - &b.g1 * &b.g1 + &quarter)))
                / (scale * scale),
        );
        let ginv = checked_inverse(&b.g, z)?;
        let mp = w.m_plus(z)?;
        let mm = w.m_minus(z)?;
        let mscale = fnorm(&mp).max(fnorm(&mm)).max(1.0);
        for (sign, mval) in [(1.0, &mp), (-1.0, &mm)] {
            let left = &ginv * cr(-0.5 * sign) - &ginv * &b.g2;
            let right = &ginv * cr(-0.5 * sign) - &b.g1 * &ginv;
            let r = fnorm(&(left - mval)).max(fnorm(&(right - mval))) / mscale;
            rep.reconstruction = rep.reconstruction.max(r);
        }
        let assembled = full_m_from_half_lines(&mp, &mm, z)?;
        let direct = w.full(z)?;
        rep.assembly = rep
            .assembly
            .max(fnorm(&(assembled - &direct)) / fnorm(&direct).max(1.0));
    }
    Ok(rep)
}

/// Smallest eigenvalue of Im A over the samples (≥ 0 for Herglotz functions).
pub fn herglotz_min<F>(f: F, zs: &[Complex64]) -> Result<f64>
where
    F: Fn(Complex64) -> Result<CMatrix>,
{
    let mut worst = f64::INFINITY;
    for &z in zs {
        let a = f(z)?;
        let im = linalg::imag_part(&a);
        worst = worst.min(herm_eig(&im)?.values[0]);
    }
    Ok(worst)
}

pub const DEFAULT_LADDER: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

#[derive(Debug, Clone)]
pub struct Limit {
    pub value: CMatrix,
    /// Distance between the last two extrapolants.
    pub spread: f64,
}

/// Richardson extrapolation of ε ↦ X(ε) to ε = 0 along a decade ladder, assuming O(ε) error.
pub fn boundary_limit<F>(f: F, ladder: &[f64]) -> Result<Limit>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    if ladder.len() < 2 {
        return Err(Error::Invalid("ε-ladder needs at least two rungs".into()));
    }
    let vals: Vec<CMatrix> = ladder.iter().map(|&e| f(e)).collect::<Result<_>>()?;
    let ex: Vec<CMatrix> = ladder
        .windows(2)
        .zip(vals.windows(2))
        .map(|(e, v)| {
            let r = e[0] / e[1];
            (&v[1] * cr(r) - &v[0]) / cr(r - 1.0)
        })
        .collect();
    let value = ex[ex.len() - 1].clone();
    let spread = if ex.len() >= 2 {
        fnorm(&(&ex[ex.len() - 1] - &ex[ex.len() - 2]))
    } else {
        fnorm(&(&vals[1] - &vals[0]))
    };
    if !spread.is_finite() || spread > 1e-2 * (1.0 + fnorm(&value)) {
        return Err(Error::ExtrapolationDiverged(spread));
    }
    Ok(Limit { value, spread })
}

/// Ξ(λ) = (1/π) Im ln g(λ + i0) with the distance from normality.
#[derive(Debug, Clone)]
pub struct XiValue {
    pub xi: CMatrix,
    pub defect: f64,
}

/// (1/π) Im ln g for one matrix: eigen-decomposition through the Hermitian pencil of its
/// real and imaginary parts (exact when g is normal).
pub fn xi_of(g: &CMatrix) -> Result<XiValue> {
    let m = g.nrows();
    let re = linalg::hermitian_part(g);
    let im = linalg::imag_part(g);
    let t = std::f64::consts::FRAC_1_SQRT_2 * 0.731;
    let sd = herm_eig(&(&re + &im * cr(t)))?;
    let mut xi = CMatrix::zeros(m, m);
    let mut recon = CMatrix::zeros(m, m);
    for k in 0..m {
        let v = sd.vectors.column(k).clone_owned();
        let a = v.dotc(&(&re * &v)).re;
        let b = v.dotc(&(&im * &v)).re;
        let p = &v * v.adjoint();
        xi += &p * cr(b.max(0.0).atan2(a) / std::f64::consts::PI);
        recon += &p * c(a, b);
    }
    let defect = fnorm(&(recon - g)) / fnorm(g).max(1e-300);
    Ok(XiValue { xi, defect })
}

pub fn xi_function<G>(g: G, lambda: f64, ladder: &[f64]) -> Result<XiValue>
where
    G: Fn(Complex64) -> Result<CMatrix>,
{
    let defect = std::cell::Cell::new(0.0f64);
    let lim = boundary_limit(
        |e| {
            let v = xi_of(&g(c(lambda, e))?)?;
            defect.set(defect.get().max(v.defect));
            Ok(v.xi)
        },
        ladder,
    )?;
    Ok(XiValue {
        xi: lim.value,
        defect: defect.get(),
    })
}

/// max ‖lim M₊(λ+iε) − (lim M₋(λ+iε))*‖ over the grid.
pub fn reflectionless_check<P, M>(mp: P, mm: M, lambdas: &[f64], ladder: &[f64]) -> Result<f64>
where
    P: Fn(Complex64) -> Result<CMatrix>,
    M: Fn(Complex64) -> Result<CMatrix>,
{
    let mut worst = 0.0f64;
    for &l in lambdas {
        let a = boundary_limit(|e| mp(c(l, e)), ladder)?;
        let b = boundary_limit(|e| mm(c(l, e)), ladder)?;
        worst = worst.max(fnorm(&(&a.value - b.value.adjoint())));
    }
    Ok(worst)
}

/// (1/π) Im M(λ + i0) on the grid.
pub fn stieltjes_invert<M>(m: M, lambdas: &[f64], ladder: &[f64]) -> Result<Vec<CMatrix>>
where
    M: Fn(Complex64) -> Result<CMatrix>,
{
    lambdas
        .iter()
        .map(|&l| {
            let lim = boundary_limit(|e| m(c(l, e)), ladder)?;
            Ok(linalg::imag_part(&lim.value) / cr(std::f64::consts::PI))
        })
        .collect()
}

/// Closed-form spectral density (1/(2πR^{1/2}))[[H, −G₂], [−G₁, F]] on Σ°, zero elsewhere.
pub fn density_closed_form(q: &PencilQuadruple, lambda: f64) -> CMatrix {
    let m = q.dim();
    let b = &q.bands;
    let interior = b
        .bands()
        .iter()
        .any(|&(lo, hi)| lambda > lo && lambda < hi);
    if !interior {
        return CMatrix::zeros(2 * m, 2 * m);
    }
    let sq = b.sqrt_r(cr(lambda));
    let [f, g1, g2, h] = q.eval(cr(lambda));
    block2(&h, &(-g2), &(-g1), &f) / (sq * 2.0 * std::f64::consts::PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScalarKind {
    FType,
    HType,
    Invalid,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarClassification {
    pub kind: ScalarKind,
    /// min Im(iP(z)/R^{1/2}(z)) over the sampled upper half-plane.
    pub min_im: f64,
}

/// Which of the two Herglotz forms iP/R^{1/2} a monic polynomial with these zeros gives.
pub fn scalar_classify(zeros: &[f64], b: &BandStructure) -> ScalarClassification {
    let n = b.n();
    let gaps = b.gaps();
    let per_gap: Vec<usize> = gaps
        .iter()
        .map(|&(lo, hi)| zeros.iter().filter(|&&z| z >= lo && z <= hi).count())
        .collect();
    let below = zeros.iter().filter(|&&z| z <= b.bottom()).count();
    let in_gaps: usize = per_gap.iter().sum();
    let gaps_ok = per_gap.iter().all(|&k| k == 1);
    let kind = if gaps_ok && zeros.len() == n && in_gaps == n {
        ScalarKind::FType
    } else if gaps_ok && below == 1 && zeros.len() == n + 1 && in_gaps == n {
        ScalarKind::HType
    } else {
        ScalarKind::Invalid
    };
    let p = poly::from_roots(zeros);
    let mut min_im = f64::INFINITY;
    let span = (b.top() - b.bottom()).max(1.0);
    for i in 0..60 {
        for j in 0..12 {
            let x = b.bottom() - span + 3.0 * span * i as f64 / 59.0;
            let y = span * 10f64.powf(-3.0 + 3.5 * j as f64 / 11.0);
            let z = c(x, y);
            let v = I * poly::eval_real(&p, z) / b.sqrt_r(z);
            min_im = min_im.min(v.im);
        }
    }
    ScalarClassification { kind, min_im }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepKind {
    F,
    H,
}

/// iP(z)/R^{1/2}(z), the left side of the Herglotz representations.
pub fn herglotz_lhs(p: &[f64], b: &BandStructure, z: Complex64) -> Complex64 {
    I * poly::eval_real(p, z) / b.sqrt_r(z)
}

/// Right side: (1/π)∫_Σ P(λ)/R^{1/2}(λ) k(λ,z) dλ (+ Re-constant for the H form).
pub fn herglotz_rep_integral(p: &[f64], b: &BandStructure, z: Complex64, kind: RepKind, tol: f64) -> Result<Complex64> {
    let n = b.n();
    let e = b.edges();
    let kernel = |l: f64| -> Complex64 {
        match kind {
            RepKind::F => (cr(l) - z).inv(),
            RepKind::H => (cr(1.0) + z * l) / ((cr(l) - z) * (1.0 + l * l)),
        }
    };
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let sigma = b.band_sign(j);
        total += quadrature::finite_band(
            e[2 * j],
            e[2 * j + 1],
            |l| kernel(l) * (sigma * poly::eval_real(p, cr(l)).re / b.band_weight(j, l).sqrt()),
            tol,
        )?;
    }
    let top = e[2 * n];
    let scale = (z - top).norm().max(1.0).max(top - e[0]);
    total += quadrature::half_line(
        top,
        scale,
        |l| {
            let w: f64 = e[..2 * n].iter().map(|&el| (l - el).abs()).product();
            kernel(l) * (poly::eval_real(p, cr(l)).re / w.sqrt())
        },
        tol,
    )?;
    total /= std::f64::consts::PI;
    if kind == RepKind::H {
        total += herglotz_lhs(p, b, I).re;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;
    use crate::potential::{closed_form_pencils_n0, closed_form_pencils_n1, HochstadtPotential, HochstadtSpec, Potential};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b012() -> BandStructure {
        BandStructure::new(vec![0.0, 1.0, 2.0]).unwrap()
    }

    fn upper_samples(n: usize, seed: u64, r: f64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| c(rng.random_range(-r..r), rng.random_range(1e-3..r)))
            .collect()
    }

    fn n1_weyl(m: usize, seed: u64, x: f64) -> WeylData {
        let alphas: Vec<f64> = (0..m).map(|k| 0.3 + 0.9 * k as f64).collect();
        let spec = HochstadtSpec::new(b012(), alphas, random_unitary(m, seed)).unwrap();
        let pot = HochstadtPotential::new(spec).unwrap();
        let d = pot.derivs(x, 2).unwrap();
        WeylData::new(closed_form_pencils_n1(&d[0], &d[1], &d[2], &b012()))
    }

    #[test]
    fn gamma_extract_scalar() {
        let b = b012();
        let f = MatrixPencil::scalar_poly(&[-1.5, 1.0], 1);
        let d = gamma_extract(&f, &b).unwrap();
        assert_eq!(d.points.len(), 1);
        assert!((d.points[0].mu - 1.5).abs() < 1e-12);
        assert!((d.points[0].gamma[(0, 0)] - cr(0.375f64.sqrt())).norm() < 1e-11);
    }

    #[test]
    fn gamma_extract_gap_edge_and_identity() {
        let b = b012();
        let f = MatrixPencil::scalar_poly(&[-1.0, 1.0], 1);
        let d = gamma_extract(&f, &b).unwrap();
        assert!(fnorm(&d.points[0].gamma) < 1e-12);
        let f = MatrixPencil::scalar_poly(&[-1.25, 1.0], 3);
        let d = gamma_extract(&f, &b).unwrap();
        assert_eq!(d.points.len(), 1);
        let want = b.eval_r(cr(1.25)).norm().sqrt();
        assert!(fnorm(&(&d.points[0].gamma - eye(3) * cr(want))) < 1e-10);
    }

    #[test]
    fn gamma_extract_zone_violation() {
        let b = b012();
        let f = MatrixPencil::scalar_poly(&[-0.5, 1.0], 1);
        assert!(matches!(gamma_extract(&f, &b), Err(Error::ZoneViolation { .. })));
    }

    #[test]
    fn borg_weyl_and_green() {
        let q = closed_form_pencils_n0(-2.0, 3);
        let w = WeylData::new(q.clone());
        for z in upper_samples(20, 3, 5.0) {
            let k = (z + 2.0).sqrt();
            assert!(fnorm(&(w.m_plus(z).unwrap() - eye(3) * (I * k))) < 1e-13);
            assert!(fnorm(&(w.m_minus(z).unwrap() + eye(3) * (I * k))) < 1e-13);
            let g = green_diag(&q, z).unwrap();
            assert!(fnorm(&(g - eye(3) * (I * 0.5 / k))) < 1e-13);
            let bl = w.blocks(z).unwrap();
            assert!(fnorm(&(bl.h - eye(3) * (I * 0.5 * k))) < 1e-13);
        }
    }

    #[test]
    fn n1_forms_agree_and_conjugate() {
        let w = n1_weyl(2, 5, 0.4);
        for z in upper_samples(30, 1, 6.0) {
            for s in [1.0, -1.0] {
                let a = w.m(z, s).unwrap();
                let b = w.m_right(z, s).unwrap();
                assert!(fnorm(&(&a - &b)) < 1e-11 * fnorm(&a).max(1.0));
                let bar = w.m(z.conj(), s).unwrap();
                assert!(fnorm(&(bar.adjoint() - &a)) < 1e-11 * fnorm(&a).max(1.0));
            }
        }
    }

    #[test]
    fn n1_block_identities() {
        let w = n1_weyl(2, 7, -0.3);
        let rep = check_block_identities(&w, &upper_samples(100, 2, 8.0)).unwrap();
        assert!(rep.max() < 1e-10, "{rep:?}");
    }

    #[test]
    fn green_matches_closed_form_and_large_z() {
        let w = n1_weyl(1, 1, 0.0);
        let q = w.quad.f.coeff(0)[(0, 0)];
        for z in upper_samples(10, 4, 4.0) {
            let want = I * 0.5 / b012().sqrt_r(z) * (z + q);
            assert!((w.green(z).unwrap()[(0, 0)] - want).norm() < 1e-13);
        }
        let z = c(0.0, 1e8);
        let g = w.green(z).unwrap()[(0, 0)];
        let lead = I * 0.5 / z.sqrt();
        assert!((g / lead - 1.0).norm() < 1e-3);
    }

    #[test]
    fn herglotz_positivity() {
        let w = n1_weyl(2, 11, 0.9);
        let zs = upper_samples(500, 9, 10.0);
        assert!(herglotz_min(|z| w.m_plus(z), &zs).unwrap() >= -1e-12);
        assert!(herglotz_min(|z| w.m_minus(z).map(|a| -a), &zs).unwrap() >= -1e-12);
        assert!(herglotz_min(|z| w.full(z), &zs).unwrap() >= -1e-12);
        assert!(herglotz_min(|z| w.green(z), &zs).unwrap() >= -1e-12);
    }

    #[test]
    fn xi_values() {
        let q = closed_form_pencils_n0(0.0, 2);
        let w = WeylData::new(q);
        let above = xi_function(|z| w.green(z), 1.5, &DEFAULT_LADDER).unwrap();
        assert!(fnorm(&(above.xi - eye(2) * cr(0.5))) < 1e-6);
        let below = xi_function(|z| w.green(z), -1.0, &DEFAULT_LADDER).unwrap();
        assert!(fnorm(&below.xi) < 1e-6);
        // inside the gap of the one-gap family the entries are 0 or 1
        let w1 = n1_weyl(1, 1, 0.2);
        let mu = -w1.quad.f.coeff(0)[(0, 0)].re;
        let lam = if (mu - 1.3).abs() > 0.1 { 1.3 } else { 1.7 };
        let xi = xi_function(|z| w1.green(z), lam, &DEFAULT_LADDER).unwrap().xi[(0, 0)].re;
        assert!(xi.abs() < 1e-6 || (xi - 1.0).abs() < 1e-6, "{xi}");
    }

    #[test]
    fn reflectionless_closed_forms() {
        let w0 = WeylData::new(closed_form_pencils_n0(0.0, 2));
        let lams: Vec<f64> = (0..10).map(|k| 0.3 + 0.5 * k as f64).collect();
        assert!(reflectionless_check(|z| w0.m_plus(z), |z| w0.m_minus(z), &lams, &DEFAULT_LADDER).unwrap() < 1e-8);
        let w1 = n1_weyl(2, 3, 0.1);
        let lams: Vec<f64> = [0.1, 0.3, 0.6, 0.9, 2.2, 3.0, 5.0].to_vec();
        assert!(reflectionless_check(|z| w1.m_plus(z), |z| w1.m_minus(z), &lams, &DEFAULT_LADDER).unwrap() < 1e-6);
    }

    #[test]
    fn stieltjes_density() {
        let q = closed_form_pencils_n0(0.0, 1);
        let w = WeylData::new(q.clone());
        let lams = [0.5, 2.0, 7.0];
        let dens = stieltjes_invert(|z| w.full(z), &lams, &DEFAULT_LADDER).unwrap();
        for (d, &l) in dens.iter().zip(&lams) {
            let want = 1.0 / (2.0 * std::f64::consts::PI * l.sqrt());
            assert!((d[(1, 1)].re - want).abs() < 1e-6);
            assert!(fnorm(&(d - density_closed_form(&q, l))) < 1e-6);
        }
        let w1 = n1_weyl(1, 1, 0.0);
        let gap = stieltjes_invert(|z| w1.full(z), &[1.05, 1.95], &DEFAULT_LADDER);
        if let Ok(g) = gap {
            for d in g {
                assert!(fnorm(&d) < 1e-5);
            }
        }
        let dens = stieltjes_invert(|z| w1.full(z), &[0.4, 3.0], &DEFAULT_LADDER).unwrap();
        let ratio = |l: f64| (w1.quad.f.eval(cr(l)) / b012().sqrt_r(cr(l)))[(0, 0)].re;
        let r1 = dens[0][(1, 1)].re / dens[1][(1, 1)].re;
        assert!((r1 - ratio(0.4) / ratio(3.0)).abs() < 1e-5);
    }

    #[test]
    fn scalar_classification() {
        let b = b012();
        let f = scalar_classify(&[1.5], &b);
        assert_eq!(f.kind, ScalarKind::FType);
        assert!(f.min_im >= -1e-12);
        let h = scalar_classify(&[-1.0, 1.5], &b);
        assert_eq!(h.kind, ScalarKind::HType);
        assert!(h.min_im >= -1e-12);
        let bad = scalar_classify(&[0.5], &b);
        assert_eq!(bad.kind, ScalarKind::Invalid);
        assert!(bad.min_im < 0.0);
    }

    #[test]
    fn herglotz_representations() {
        let b = b012();
        let f = poly::from_roots(&[1.5]);
        let z = I;
        let rhs = herglotz_rep_integral(&f, &b, z, RepKind::F, 1e-10).unwrap();
        assert!((rhs - herglotz_lhs(&f, &b, z)).norm() < 1e-8);
        let h = poly::from_roots(&[-1.0, 1.5]);
        for z in [I, c(-3.0, 0.2), c(4.0, -1.0), c(1.5, 0.0)] {
            let rhs = herglotz_rep_integral(&h, &b, z, RepKind::H, 1e-10).unwrap();
            assert!((rhs - herglotz_lhs(&h, &b, z)).norm() < 1e-8, "{z}");
        }
        let far = c(600.0, 800.0);
        let rhs = herglotz_rep_integral(&f, &b, far, RepKind::F, 1e-10).unwrap();
        assert!((rhs / herglotz_lhs(&f, &b, far) - 1.0).norm() < 1e-7);
    }

    #[test]
    fn tail_matches_direct() {
        let w = n1_weyl(2, 4, 0.2);
        for z in [c(0.0, 50.0), c(-30.0, 10.0), c(3.0, -40.0)] {
            for s in [1.0, -1.0] {
                let direct = w.m(z, s).unwrap() - eye(2) * (I * z.sqrt() * s);
                let tail = w.m_tail(z, s).unwrap();
                assert!(fnorm(&(direct - &tail)) < 1e-10, "{z}");
            }
        }
    }
}
