//! Stationary KdV hierarchy: the constants c_k(E), the coefficients R̂_k of the
//! diagonal Green's function expansion, s-KdV residuals and the one-gap algebraic constraints.

use crate::branch::BandStructure;
use crate::error::{Error, Result};
use crate::flow::asymptotic_m_coeffs;
use crate::jet::MatJet;
use crate::linalg::{cr, eye, fnorm, mat_func, CMatrix, I};
use crate::potential::c1;

fn compositions(parts: usize, total: usize, cur: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
    if parts == 1 {
        cur.push(total);
        out(cur);
        cur.pop();
        return;
    }
    for j in 0..=total {
        cur.push(j);
        compositions(parts - 1, total - j, cur, out);
        cur.pop();
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// c_k = −Σ_{j₀+…+j₂ₙ=k} Π (2jᵢ)! Eᵢ^{jᵢ} / (2^{2k} Π (jᵢ!)² Π (2jᵢ − 1)), k = 0..=kmax.
pub fn c_coeffs(b: &BandStructure, kmax: usize) -> Vec<f64> {
    let e = b.edges();
    (0..=kmax)
        .map(|k| {
            let mut sum = 0.0;
            compositions(e.len(), k, &mut Vec::new(), &mut |js: &[usize]| {
                let mut t = 1.0;
                for (&j, &el) in js.iter().zip(e) {
                    t *= factorial(2 * j) / (factorial(j).powi(2) * (2.0 * j as f64 - 1.0)) * el.powi(j as i32);
                }
                sum += t;
            });
            -sum / 4f64.powi(k as i32)
        })
        .collect()
}

/// Jets of R̂₀..R̂_kmax in g ~ (i/2√z) Σ R̂_k z^{−k}, from the expansions of M±.
/// The Q jet must have order ≥ 2·kmax − 2 (one more per derivative wanted).
pub fn rhat_jets(q: &MatJet, kmax: usize) -> Result<Vec<MatJet>> {
    let m = q.dim();
    if kmax == 0 {
        return Ok(vec![MatJet::constant(eye(m), q.order())]);
    }
    let count = 2 * kmax - 1;
    if q.order() + 1 < count {
        return Err(Error::InsufficientDerivatives {
            needed: count - 1,
            have: q.order(),
        });
    }
    let mp = asymptotic_m_coeffs(q, count, 1.0)?;
    let mm = asymptotic_m_coeffs(q, count, -1.0)?;
    // M₋ − M₊ = −2i√z (I + Σ_{k≥1} D_k u^{k+1}), u = z^{−1/2}
    let scale = (I * -2.0).inv();
    let mut a: Vec<Option<MatJet>> = vec![None, None];
    for k in 0..count {
        a.push(Some(mm[k].sub(&mp[k]).scale(scale)));
    }
    let top = 2 * kmax;
    let mut bcoef: Vec<MatJet> = vec![MatJet::constant(eye(m), q.order())];
    for j in 1..=top {
        let mut acc: Option<MatJet> = None;
        for i in 2..=j {
            if let Some(ai) = &a[i] {
                let t = ai.mul(&bcoef[j - i]);
                acc = Some(match acc {
                    None => t,
                    Some(s) => s.add(&t),
                });
            }
        }
        bcoef.push(match acc {
            None => MatJet::zeros(m, q.order()),
            Some(s) => s.scale(cr(-1.0)),
        });
    }
    Ok((0..=kmax).map(|k| bcoef[2 * k].clone()).collect())
}

/// s-KdV_n(Q) = −2 Σ_{ℓ=0}^{n} c_{n−ℓ} R̂′_{ℓ+1} with free constants c₀..c_n.
pub fn skdv_residual_with(q: &MatJet, cs: &[f64]) -> Result<CMatrix> {
    if cs.is_empty() {
        return Err(Error::Invalid("need at least c₀".into()));
    }
    let n = cs.len() - 1;
    let r = rhat_jets(q, n + 1)?;
    let m = q.dim();
    let mut acc = CMatrix::zeros(m, m);
    for l in 0..=n {
        let d = r[l + 1].deriv();
        acc += d.value() * cr(cs[n - l]);
    }
    Ok(acc * cr(-2.0))
}

/// s-KdV_n with the constants fixed by the band edges.
pub fn skdv_residual(q: &MatJet, b: &BandStructure) -> Result<CMatrix> {
    skdv_residual_with(q, &c_coeffs(b, b.n()))
}

/// d₁ = c₁² − Σ_{k<l} E_k E_l.
pub fn d1(b: &BandStructure) -> f64 {
    let e = b.edges();
    let mut pairs = 0.0;
    for k in 0..e.len() {
        for l in k + 1..e.len() {
            pairs += e[k] * e[l];
        }
    }
    c1(b).powi(2) - pairs
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AlgebraicResiduals {
    /// ¼Q″ − ¾Q² − c₁Q + d₁I
    pub second_order: f64,
    /// (¼Q″ − ½Q² − c₁Q)(½Q + c₁I) − Q′²/16 + E₀E₁E₂I
    pub first_integral: f64,
    /// Q′² + 16R(−Q/2 − c₁I)
    pub square: f64,
}

impl AlgebraicResiduals {
    pub fn max(&self) -> f64 {
        self.second_order.max(self.first_integral).max(self.square)
    }
}

/// Residuals of the one-gap constraints on Q, Q′, Q″.
pub fn algebraic_constraints_n1(q: &CMatrix, qp: &CMatrix, qpp: &CMatrix, b: &BandStructure) -> Result<AlgebraicResiduals> {
    if b.n() != 1 {
        return Err(Error::Invalid("one-gap constraints need three band edges".into()));
    }
    let m = q.nrows();
    let id = eye(m);
    let c1v = cr(c1(b));
    let q2 = q * q;
    let second = qpp * cr(0.25) - &q2 * cr(0.75) - q * c1v + &id * cr(d1(b));
    let prod: f64 = b.edges().iter().product();
    let h0 = qpp * cr(0.25) - &q2 * cr(0.5) - q * c1v;
    let first = &h0 * (q * cr(0.5) + &id * c1v) - qp * qp * cr(1.0 / 16.0) + &id * cr(prod);
    let mu = -(q * cr(0.5)) - &id * c1v;
    let rmu = mat_func(&crate::linalg::hermitian_part(&mu), |l| Some(b.eval_r(cr(l))))?;
    let square = qp * qp + rmu * cr(16.0);
    Ok(AlgebraicResiduals {
        second_order: fnorm(&second),
        first_integral: fnorm(&first),
        square: fnorm(&square),
    })
}
