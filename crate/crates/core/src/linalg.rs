//! Dense complex m×m matrices and Hermitian spectral calculus.
//!
//! Everything here is small and dense: the potentials of interest have
//! m ≤ 16, so a cyclic Jacobi sweep is both fast and reproducible.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn eye(m: usize) -> CMatrix {
    CMatrix::identity(m, m)
}

pub fn scalar(m: usize, v: Complex64) -> CMatrix {
    CMatrix::identity(m, m) * v
}

pub fn from_real_diag(d: &[f64]) -> CMatrix {
    let m = d.len();
    let mut a = CMatrix::zeros(m, m);
    for (k, &v) in d.iter().enumerate() {
        a[(k, k)] = cr(v);
    }
    a
}

/// Frobenius norm.
pub fn fnorm(a: &CMatrix) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_defect(a: &CMatrix) -> f64 {
    fnorm(&(a - a.adjoint()))
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * cr(0.5)
}

/// Im(A) = (A − A*)/(2i), Hermitian.
pub fn imag_part(a: &CMatrix) -> CMatrix {
    (a - a.adjoint()) * c(0.0, -0.5)
}

pub fn inverse(a: &CMatrix) -> Option<CMatrix> {
    a.clone().try_inverse()
}

/// Result of [`herm_eig`]: eigenvalues clustered into distinct values, one
/// orthogonal projection per cluster, plus the raw eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projections: Vec<CMatrix>,
    /// Raw eigenvalues (ascending, with multiplicity).
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are eigenvectors matching `values`.
    pub vectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let m = self.dim();
        self.eigenvalues
            .iter()
            .zip(&self.projections)
            .fold(CMatrix::zeros(m, m), |acc, (&q, p)| acc + p * cr(q))
    }

    pub fn multiplicity(&self, k: usize) -> usize {
        self.projections[k].trace().re.round() as usize
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    /// Relative Hermiticity tolerance.
    pub herm_tol: f64,
    /// Relative gap below which eigenvalues share a projection.
    pub cluster_tol: f64,
    pub max_sweeps: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            herm_tol: 1e-10,
            cluster_tol: 1e-10,
            max_sweeps: 100,
        }
    }
}

pub fn herm_eig(a: &CMatrix) -> Result<SpectralDecomposition> {
    herm_eig_with(a, &EigOptions::default())
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
pub fn herm_eig_with(a: &CMatrix, opts: &EigOptions) -> Result<SpectralDecomposition> {
    let m = a.nrows();
    if a.ncols() != m {
        return Err(Error::DimMismatch {
            left: m,
            right: a.ncols(),
        });
    }
    let scale = fnorm(a);
    let defect = hermitian_defect(a);
    let tol = opts.herm_tol * scale.max(f64::MIN_POSITIVE);
    if defect > tol && defect > 1e-300 {
        return Err(Error::NotHermitian { defect, tol });
    }
    let mut w = hermitian_part(a);
    let mut v = eye(m);

    let mut converged = m <= 1;
    for _sweep in 0..opts.max_sweeps {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * scale || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                rotate(&mut w, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "Jacobi eigensolver",
            iterations: opts.max_sweeps,
        });
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| w[(i, i)].re.total_cmp(&w[(j, j)].re));
    let values: Vec<f64> = order.iter().map(|&i| w[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(m, m);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }

    let spread = values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let gap = opts.cluster_tol * spread.max(1e-300);
    let mut eigenvalues = Vec::new();
    let mut projections: Vec<CMatrix> = Vec::new();
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && values[end] - values[end - 1] <= gap {
            end += 1;
        }
        let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        let block = vectors.columns(start, end - start);
        projections.push(&block * block.adjoint());
        eigenvalues.push(mean);
        start = end;
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        projections,
        values,
        vectors,
    })
}

// One complex Jacobi rotation annihilating w[p,q].
fn rotate(w: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    let b = apq.norm();
    if b < 1e-300 {
        return;
    }
    let phase = apq / b; // e^{iφ}
    let app = w[(p, p)].re;
    let aqq = w[(q, q)].re;
    let zeta = (aqq - app) / (2.0 * b);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let t = if zeta == 0.0 { 1.0 } else { t };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    // V restricted to (p,q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
    let vpp = cr(cs);
    let vpq = cr(sn);
    let vqp = -phase.conj() * sn;
    let vqq = phase.conj() * cs;
    let m = w.nrows();
    for k in 0..m {
        let wkp = w[(k, p)];
        let wkq = w[(k, q)];
        w[(k, p)] = wkp * vpp + wkq * vqp;
        w[(k, q)] = wkp * vpq + wkq * vqq;
    }
    for k in 0..m {
        let wpk = w[(p, k)];
        let wqk = w[(q, k)];
        w[(p, k)] = vpp.conj() * wpk + vqp.conj() * wqk;
        w[(q, k)] = vpq.conj() * wpk + vqq.conj() * wqk;
    }
    w[(p, q)] = cr(0.0);
    w[(q, p)] = cr(0.0);
    w[(p, p)] = cr(w[(p, p)].re);
    w[(q, q)] = cr(w[(q, q)].re);
    for k in 0..m {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * vpp + vkq * vqp;
        v[(k, q)] = vkp * vpq + vkq * vqq;
    }
}

/// Functional calculus Σ f(q_k) P_k over the clustered spectrum.
pub fn mat_func<F>(a: &CMatrix, f: F) -> Result<CMatrix>
where
    F: Fn(f64) -> Option<Complex64>,
{
    let sd = herm_eig(a)?;
    apply_func(&sd, f)
}

pub fn apply_func<F>(sd: &SpectralDecomposition, f: F) -> Result<CMatrix>
where
    F: Fn(f64) -> Option<Complex64>,
{
    let m = sd.dim();
    let mut out = CMatrix::zeros(m, m);
    for (&q, p) in sd.eigenvalues.iter().zip(&sd.projections) {
        let v = f(q).ok_or(Error::DomainError { at: q })?;
        out += p * v;
    }
    Ok(out)
}

/// Spectral (operator 2-) norm.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let g = a.adjoint() * a;
    match herm_eig(&hermitian_part(&g)) {
        Ok(sd) => sd.values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => fnorm(a),
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::DimMismatch {
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    Ok(a * b - b * a)
}

pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    commutator(a, b).map(|cm| op_norm(&cm))
}

/// Smallest eigenvalue of the Hermitian part of Im(A); ≥ 0 for Herglotz values.
pub fn min_imag_eig(a: &CMatrix) -> f64 {
    herm_eig(&imag_part(a))
        .map(|sd| sd.values[0])
        .unwrap_or(f64::NAN)
}

/// Haar-like random unitary: Gram–Schmidt on a seeded complex Gaussian matrix.
pub fn random_unitary(m: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = CMatrix::zeros(m, m);
    for v in a.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v = c(re, im);
    }
    gram_schmidt(&a)
}

pub fn gram_schmidt(a: &CMatrix) -> CMatrix {
    let m = a.ncols();
    let mut q = a.clone();
    for j in 0..m {
        for _pass in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dotc(&q.column(j));
                let qk = q.column(k).clone_owned();
                let mut col = q.column_mut(j);
                col -= qk * proj;
            }
        }
        let nrm = q.column(j).norm();
        q.column_mut(j).unscale_mut(nrm);
    }
    q
}

/// Random Hermitian matrix with standard-normal entries.
pub fn random_hermitian(m: usize, rng: &mut impl Rng) -> CMatrix {
    let mut a = CMatrix::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = cr(rng.sample(StandardNormal));
        for j in (i + 1)..m {
            let v = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
    a
}

pub fn unitary_defect(u: &CMatrix) -> f64 {
    fnorm(&(u.adjoint() * u - eye(u.nrows())))
}

/// Block 2×2 assembly of four m×m matrices.
pub fn block2(a11: &CMatrix, a12: &CMatrix, a21: &CMatrix, a22: &CMatrix) -> CMatrix {
    let m = a11.nrows();
    let mut out = CMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(a11);
    out.view_mut((0, m), (m, m)).copy_from(a12);
    out.view_mut((m, 0), (m, m)).copy_from(a21);
    out.view_mut((m, m), (m, m)).copy_from(a22);
    out
}

pub fn block(a: &CMatrix, p: usize, q: usize) -> CMatrix {
    let m = a.nrows() / 2;
    a.view((p * m, q * m), (m, m)).clone_owned()
}
