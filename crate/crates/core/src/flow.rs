//! x-dependence: fundamental systems, Weyl solutions, pencil transport and the
//! coefficient flow, Riccati residuals and high-energy expansions of M±.

use num_complex::Complex64;

use crate::branch::BandStructure;
use crate::error::{Error, Result};
use crate::jet::MatJet;
use crate::linalg::{block2, c, cr, eye, fnorm, inverse, CMatrix, I};
use crate::ode::{integrate, OdeOptions};
use crate::pencil::{check_quadruple, MatrixPencil, PencilQuadruple};
use crate::potential::{c1, Potential};

/// θ, φ with θ(x₀) = I, θ′(x₀) = 0, φ(x₀) = 0, φ′(x₀) = I.
#[derive(Debug, Clone)]
pub struct FundamentalPoint {
    pub x: f64,
    pub theta: CMatrix,
    pub theta_p: CMatrix,
    pub phi: CMatrix,
    pub phi_p: CMatrix,
}

impl FundamentalPoint {
    /// [[θ, φ], [θ′, φ′]].
    pub fn transfer(&self) -> CMatrix {
        block2(&self.theta, &self.phi, &self.theta_p, &self.phi_p)
    }
}

fn pack(ms: &[&CMatrix]) -> Vec<Complex64> {
    ms.iter().flat_map(|a| a.iter().copied()).collect()
}

fn unpack(v: &[Complex64], m: usize, count: usize) -> Vec<CMatrix> {
    (0..count)
        .map(|k| CMatrix::from_column_slice(m, m, &v[k * m * m..(k + 1) * m * m]))
        .collect()
}

/// Integrate from x0 to every x in xs (either side), returning states in input order.
fn integrate_both<F>(f: F, x0: f64, y0: &[Complex64], xs: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<Complex64>>>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    let mut fwd: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] >= x0).collect();
    let mut bwd: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] < x0).collect();
    fwd.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    bwd.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]));
    let mut out = vec![Vec::new(); xs.len()];
    for idx in [fwd, bwd] {
        let pts: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
        let ys = integrate(&f, x0, y0, &pts, opts)?;
        for (i, y) in idx.into_iter().zip(ys) {
            out[i] = y;
        }
    }
    Ok(out)
}

fn potential_at(pot: &dyn Potential, x: f64) -> CMatrix {
    pot.value(x)
}

/// Solves −Y″ + QY = zY for the canonical fundamental system based at x0.
pub fn fundamental_system(pot: &dyn Potential, z: Complex64, x0: f64, xs: &[f64], opts: &OdeOptions) -> Result<Vec<FundamentalPoint>> {
    let m = pot.dim();
    let id = eye(m);
    let zero = CMatrix::zeros(m, m);
    let y0 = pack(&[&id, &zero, &zero, &id]);
    let rhs = |x: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let v = unpack(y, m, 4);
        let a = potential_at(pot, x) - &id * z;
        let d = pack(&[&v[1], &(&a * &v[0]), &v[3], &(&a * &v[2])]);
        dy.copy_from_slice(&d);
    };
    let ys = integrate_both(rhs, x0, &y0, xs, opts)?;
    Ok(xs
        .iter()
        .zip(ys)
        .map(|(&x, y)| {
            let v = unpack(&y, m, 4);
            FundamentalPoint {
                x,
                theta: v[0].clone(),
                theta_p: v[1].clone(),
                phi: v[2].clone(),
                phi_p: v[3].clone(),
            }
        })
        .collect())
}

fn j_matrix(m: usize) -> CMatrix {
    let id = eye(m);
    let zero = CMatrix::zeros(m, m);
    block2(&zero, &id, &(-&id), &zero)
}

/// ‖T(z̄)* J T(z) − J‖ for transfer matrices at z and z̄.
pub fn symplectic_defect(at_z: &FundamentalPoint, at_zbar: &FundamentalPoint) -> f64 {
    let m = at_z.theta.nrows();
    let j = j_matrix(m);
    fnorm(&(at_zbar.transfer().adjoint() * &j * at_z.transfer() - j))
}

/// |det T − 1|.
pub fn determinant_defect(p: &FundamentalPoint) -> f64 {
    (p.transfer().determinant() - 1.0).norm()
}

/// Weyl solutions ψ± = θ + φM±(x₀) and their derivatives.
#[derive(Debug, Clone)]
pub struct WeylSolutions {
    pub plus: CMatrix,
    pub plus_p: CMatrix,
    pub minus: CMatrix,
    pub minus_p: CMatrix,
}

impl WeylSolutions {
    pub fn new(p: &FundamentalPoint, m_plus0: &CMatrix, m_minus0: &CMatrix) -> Self {
        WeylSolutions {
            plus: &p.theta + &p.phi * m_plus0,
            plus_p: &p.theta_p + &p.phi_p * m_plus0,
            minus: &p.theta + &p.phi * m_minus0,
            minus_p: &p.theta_p + &p.phi_p * m_minus0,
        }
    }

    /// (M₊(x), M₋(x)) = (ψ₊′ψ₊⁻¹, ψ₋′ψ₋⁻¹).
    pub fn m_at(&self) -> Result<(CMatrix, CMatrix)> {
        let ip = inverse(&self.plus).ok_or(Error::SingularF { re: f64::NAN, im: f64::NAN })?;
        let im = inverse(&self.minus).ok_or(Error::SingularF { re: f64::NAN, im: f64::NAN })?;
        Ok((&self.plus_p * ip, &self.minus_p * im))
    }
}

pub fn weyl_solutions(pot: &dyn Potential, z: Complex64, x0: f64, m_plus0: &CMatrix, m_minus0: &CMatrix, xs: &[f64], opts: &OdeOptions) -> Result<Vec<WeylSolutions>> {
    Ok(fundamental_system(pot, z, x0, xs, opts)?
        .iter()
        .map(|p| WeylSolutions::new(p, m_plus0, m_minus0))
        .collect())
}

/// Green's kernel G(z,x,y) and its x-derivative, with N = (M₋(x₀) − M₊(x₀))⁻¹:
/// ψ₊(z,x) N ψ₋(z̄,y)* for x ≥ y and ψ₋(z,x) N ψ₊(z̄,y)* for x ≤ y.
pub fn green_kernel(sx: &WeylSolutions, sy_bar: &WeylSolutions, n: &CMatrix, upper: bool) -> (CMatrix, CMatrix) {
    if upper {
        (&sx.plus * n * sy_bar.minus.adjoint(), &sx.plus_p * n * sy_bar.minus.adjoint())
    } else {
        (&sx.minus * n * sy_bar.plus.adjoint(), &sx.minus_p * n * sy_bar.plus.adjoint())
    }
}

/// Jump ∂ₓG(y⁺,y) − ∂ₓG(y⁻,y) and the continuity defect of G across the diagonal.
pub fn green_jump(sy: &WeylSolutions, sy_bar: &WeylSolutions, n: &CMatrix) -> (CMatrix, f64) {
    let (gu, du) = green_kernel(sy, sy_bar, n, true);
    let (gl, dl) = green_kernel(sy, sy_bar, n, false);
    (du - dl, fnorm(&(gu - gl)))
}

/// Values of F, G₁, G₂, H at z along x, carried by the fundamental systems at z and z̄.
pub fn transport_pencils(pot: &dyn Potential, q0: &PencilQuadruple, z: Complex64, x0: f64, xs: &[f64], opts: &OdeOptions) -> Result<Vec<[CMatrix; 4]>> {
    let [f0, g10, g20, h0] = q0.eval(z);
    let a = fundamental_system(pot, z, x0, xs, opts)?;
    let b = fundamental_system(pot, z.conj(), x0, xs, opts)?;
    Ok(a
        .iter()
        .zip(&b)
        .map(|(p, pb)| {
            let tb = pb.theta.adjoint();
            let fb = pb.phi.adjoint();
            let tbp = pb.theta_p.adjoint();
            let fbp = pb.phi_p.adjoint();
            let combo = |u: &CMatrix, v: &CMatrix, ub: &CMatrix, vb: &CMatrix| -> CMatrix {
                u * &f0 * ub + v * &h0 * vb - v * &g10 * ub - u * &g20 * vb
            };
            let f = combo(&p.theta, &p.phi, &tb, &fb);
            let g1 = -combo(&p.theta_p, &p.phi_p, &tb, &fb);
            let g2 = -combo(&p.theta, &p.phi, &tbp, &fbp);
            let h = combo(&p.theta_p, &p.phi_p, &tbp, &fbp);
            [f, g1, g2, h]
        })
        .collect())
}

/// Q read off the pencil coefficients: F_{n−1} = Q/2 + c₁I (n ≥ 1), H₀ = c₁I − Q/2 (n = 0).
pub fn q_from_pencils(q: &PencilQuadruple) -> CMatrix {
    readout(&q.f.coeff(q.n().max(1) - 1), &q.h.coeff(0), q.n(), c1(&q.bands))
}

fn readout(f_top: &CMatrix, h0: &CMatrix, n: usize, c1: f64) -> CMatrix {
    let id = eye(f_top.nrows()) * cr(c1);
    if n == 0 {
        (id - h0) * cr(2.0)
    } else {
        (f_top - id) * cr(2.0)
    }
}

#[derive(Debug, Clone)]
pub struct FlowPoint {
    pub x: f64,
    pub pencils: PencilQuadruple,
    pub q: CMatrix,
    /// max of ‖F_{n−1} + H_n − 2c₁I‖ and the identity ledger at a fixed z.
    pub drift: f64,
}

fn coeff_rhs(v: &[CMatrix], m: usize, len: usize, c1: f64, out: &mut Vec<CMatrix>) {
    let f = &v[0..len];
    let g1 = &v[len..2 * len];
    let g2 = &v[2 * len..3 * len];
    let h = &v[3 * len..4 * len];
    let n = len - 2;
    let q = readout(&f[n.max(1) - 1], &h[0], n, c1);
    let zero = CMatrix::zeros(m, m);
    let prev = |a: &[CMatrix], k: usize| if k == 0 { zero.clone() } else { a[k - 1].clone() };
    out.clear();
    for k in 0..len {
        out.push(-(&g1[k] + &g2[k]));
    }
    for k in 0..len {
        out.push(prev(f, k) - &q * &f[k] - &h[k]);
    }
    for k in 0..len {
        out.push(prev(f, k) - &f[k] * &q - &h[k]);
    }
    for k in 0..len {
        out.push(prev(g1, k) + prev(g2, k) - &g1[k] * &q - &q * &g2[k]);
    }
}

fn padded(p: &MatrixPencil, len: usize) -> Vec<CMatrix> {
    (0..len).map(|k| p.coeff(k)).collect()
}

fn from_padded(v: &[CMatrix]) -> MatrixPencil {
    let mut end = v.len();
    while end > 1 && fnorm(&v[end - 1]) == 0.0 {
        end -= 1;
    }
    MatrixPencil::new(v[..end].to_vec()).expect("coefficients share one dimension")
}

/// Evolves the pencil coefficients in x from their values at x0 (Q read back from the state).
pub fn evolve_pencils(q0: &PencilQuadruple, x0: f64, xs: &[f64], opts: &OdeOptions, flow_tol: f64) -> Result<Vec<FlowPoint>> {
    let m = q0.dim();
    let n = q0.n();
    let len = n + 2;
    let mut init: Vec<CMatrix> = Vec::with_capacity(4 * len);
    for p in [&q0.f, &q0.g1, &q0.g2, &q0.h] {
        init.extend(padded(p, len));
    }
    let refs: Vec<&CMatrix> = init.iter().collect();
    let y0 = pack(&refs);
    let count = 4 * len;
    let c1v = c1(&q0.bands);
    let rhs = |_x: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let v = unpack(y, m, count);
        let mut out = Vec::with_capacity(count);
        coeff_rhs(&v, m, len, c1v, &mut out);
        let refs: Vec<&CMatrix> = out.iter().collect();
        dy.copy_from_slice(&pack(&refs));
    };
    let ys = integrate_both(rhs, x0, &y0, xs, opts)?;
    let two_c1 = eye(m) * cr(2.0 * c1(&q0.bands));
    let probe = [c(q0.bands.bottom() + 0.37, 1.1)];
    let mut out = Vec::with_capacity(xs.len());
    for (&x, y) in xs.iter().zip(ys) {
        let v = unpack(&y, m, count);
        let pencils = PencilQuadruple {
            f: from_padded(&v[0..len]),
            g1: from_padded(&v[len..2 * len]),
            g2: from_padded(&v[2 * len..3 * len]),
            h: from_padded(&v[3 * len..4 * len]),
            bands: q0.bands.clone(),
        };
        let fnm1 = if n == 0 { CMatrix::zeros(m, m) } else { v[n - 1].clone() };
        let inv = fnorm(&(&fnm1 + &v[3 * len + n] - &two_c1));
        let drift = inv.max(check_quadruple(&pencils, &probe).max());
        if drift > 10.0 * flow_tol {
            return Err(Error::IdentityDrift { x, residual: drift });
        }
        let q = q_from_pencils(&pencils);
        out.push(FlowPoint { x, pencils, q, drift });
    }
    Ok(out)
}

/// max over the grid of ‖M′ + M² − Q + zI‖ with M′ from a 5-point stencil.
pub fn riccati_residual<M, Q>(m_of_x: M, q_of_x: Q, z: Complex64, xs: &[f64], h: f64) -> Result<f64>
where
    M: Fn(f64) -> Result<CMatrix>,
    Q: Fn(f64) -> CMatrix,
{
    let mut worst = 0.0f64;
    for &x in xs {
        let mm2 = m_of_x(x - 2.0 * h)?;
        let mm1 = m_of_x(x - h)?;
        let mp1 = m_of_x(x + h)?;
        let mp2 = m_of_x(x + 2.0 * h)?;
        let d = (&mm2 - &mp2 + (&mp1 - &mm1) * cr(8.0)) / cr(12.0 * h);
        let m0 = m_of_x(x)?;
        let dim = m0.nrows();
        let r = d + &m0 * &m0 - q_of_x(x) + eye(dim) * z;
        worst = worst.max(fnorm(&r));
    }
    Ok(worst)
}

/// Jets of the coefficients M±,ₖ (k = 1..=count) in M± ~ ±i√z + Σ M±,ₖ z^{−k/2}.
/// Needs Q and at least count − 1 derivatives.
pub fn asymptotic_m_coeffs(q: &MatJet, count: usize, sign: f64) -> Result<Vec<MatJet>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if q.order() + 1 < count {
        return Err(Error::InsufficientDerivatives {
            needed: count - 1,
            have: q.order(),
        });
    }
    let half_i = I * (0.5 * sign);
    let mut ms = vec![q.scale(-half_i)];
    for k in 1..count {
        let mut acc = ms[k - 1].deriv();
        for l in 1..k {
            acc = acc.add(&ms[l - 1].mul(&ms[k - l - 1]));
        }
        ms.push(acc.scale(half_i));
    }
    Ok(ms)
}

/// Σₖ M±,ₖ z^{−k/2} (the expansion without ±i√z).
pub fn asymptotic_tail(coeffs: &[MatJet], z: Complex64) -> CMatrix {
    let m = coeffs[0].dim();
    let w = z.sqrt().inv();
    let mut acc = CMatrix::zeros(m, m);
    let mut p = w;
    for cj in coeffs {
        acc += cj.value() * p;
        p *= w;
    }
    acc
}

/// Half-line Weyl matrix for a potential equal to E₀I outside [a, b], from the ODE:
/// ψ = e^{±ik(x−edge)}I beyond the support, k = √(z − E₀), integrated back to x0.
pub fn numeric_weyl_m(pot: &dyn Potential, e0: f64, support: (f64, f64), x0: f64, z: Complex64, sign: f64, opts: &OdeOptions) -> Result<CMatrix> {
    let m = pot.dim();
    let k = (z - e0).sqrt();
    let k = if k.im < 0.0 || (k.im == 0.0 && k.re < 0.0) { -k } else { k };
    let start = if sign > 0.0 { support.1 } else { support.0 };
    let id = eye(m);
    let y0 = pack(&[&id, &(&id * (I * k * sign))]);
    let rhs = |x: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let v = unpack(y, m, 2);
        let a = pot.value(x) - &id * z;
        dy.copy_from_slice(&pack(&[&v[1], &(&a * &v[0])]));
    };
    let ys = integrate(rhs, start, &y0, &[x0], opts)?;
    let v = unpack(&ys[0], m, 2);
    let inv = inverse(&v[0]).ok_or(Error::SingularF { re: z.re, im: z.im })?;
    Ok(&v[1] * inv)
}

/// A smooth compactly supported bump amp·(1 − (x/w)²)³ on [−w, w] times `direction`.
pub fn bump(e0: f64, amp: f64, width: f64, direction: CMatrix) -> impl Potential {
    let m = direction.nrows();
    crate::potential::FnPotential {
        m,
        f: move |x: f64, k: usize| {
            let t = x / width;
            let inside = t.abs() < 1.0;
            // derivatives of (1 − t²)³ = 1 − 3t² + 3t⁴ − t⁶ in x
            let coeffs = [1.0, 0.0, -3.0, 0.0, 3.0, 0.0, -1.0];
            (0..=k)
                .map(|d| {
                    let mut v = 0.0;
                    if inside {
                        for (p, &cp) in coeffs.iter().enumerate().skip(d) {
                            let fall: f64 = (0..d).map(|i| (p - i) as f64).product();
                            v += cp * fall * t.powi((p - d) as i32);
                        }
                        v /= width.powi(d as i32);
                    }
                    let base = if d == 0 { eye(m) * cr(e0) } else { CMatrix::zeros(m, m) };
                    base + &direction * cr(amp * v)
                })
                .collect()
        },
    }
}

/// Checks that the bands passed match a quadruple's bands (used by callers that mix sources).
pub fn same_bands(a: &BandStructure, b: &BandStructure) -> bool {
    a.edges().len() == b.edges().len() && a.edges().iter().zip(b.edges()).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
}
