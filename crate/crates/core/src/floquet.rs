//! Floquet discriminant of scalar periodic potentials and band edge recovery.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cr, CMatrix};
use crate::ode::OdeOptions;
use crate::potential::{hochstadt_scalar_with, FnPotential, HochstadtPotential, Potential};

/// Δ(λ) = θ(x₀+p) + φ′(x₀+p) for a scalar potential of period p.
pub fn discriminant(pot: &dyn Potential, period: f64, x0: f64, lambda: f64, opts: &OdeOptions) -> Result<f64> {
    if pot.dim() != 1 {
        return Err(Error::DimMismatch { left: pot.dim(), right: 1 });
    }
    let fs = crate::flow::fundamental_system(pot, cr(lambda), x0, &[x0 + period], opts)?;
    Ok((fs[0].theta[(0, 0)] + fs[0].phi_p[(0, 0)]).re)
}

/// Scalar channel j of a diagonalised elliptic matrix potential.
pub fn channel(p: &HochstadtPotential, j: usize) -> impl Potential + '_ {
    let alpha = p.spec.alphas[j];
    FnPotential {
        m: 1,
        f: move |x: f64, k: usize| {
            hochstadt_scalar_with(&p.curve, x, alpha, k)
                .map(|v| v.into_iter().map(|q| CMatrix::from_element(1, 1, cr(q))).collect())
                .unwrap_or_else(|_| vec![CMatrix::from_element(1, 1, cr(f64::NAN)); k + 1])
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeScan {
    /// Simple edges (sign changes of Δ ∓ 2).
    pub edges: Vec<f64>,
    /// Points where Δ touches ±2 without crossing (closed gaps).
    pub tangencies: Vec<f64>,
    /// (λ, Δ) on the scan grid.
    pub samples: Vec<(f64, f64)>,
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, fa: f64, tol: f64) -> Result<f64> {
    let mut sa = fa.signum();
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == sa {
            a = mid;
            sa = fm.signum();
        } else {
            b = mid;
        }
        if b - a <= tol {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

fn golden_min<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Edges of {|Δ| ≤ 2} inside the window: scan, bracket, bisect; tangencies by golden search
/// on local minima of ||Δ| − 2|.
pub fn band_edges_from<F>(disc: F, window: (f64, f64), points: usize, root_tol: f64) -> Result<EdgeScan>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (lo, hi) = window;
    if !(hi > lo) || points < 3 {
        return Err(Error::WindowTooNarrow);
    }
    let lam: Vec<f64> = (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect();
    let vals: Vec<f64> = lam.par_iter().map(|&l| disc(l)).collect::<Result<_>>()?;
    let mut edges = Vec::new();
    let mut tangencies = Vec::new();
    for target in [2.0, -2.0] {
        let g = |l: f64| -> Result<f64> { Ok(disc(l)? - target) };
        let gv: Vec<f64> = vals.iter().map(|v| v - target).collect();
        for k in 0..points - 1 {
            if gv[k] == 0.0 {
                edges.push(lam[k]);
            } else if gv[k] * gv[k + 1] < 0.0 {
                edges.push(bisect(&g, lam[k], lam[k + 1], gv[k], root_tol)?);
            }
        }
        if gv[points - 1] == 0.0 {
            edges.push(lam[points - 1]);
        }
        // touching from one side: interior local minimum of |g| without a sign change nearby
        for k in 1..points - 1 {
            let (a, b, c) = (gv[k - 1].abs(), gv[k].abs(), gv[k + 1].abs());
            let same_sign = gv[k - 1] * gv[k] > 0.0 && gv[k] * gv[k + 1] > 0.0;
            if same_sign && b <= a && b <= c {
                let (x, fx) = golden_min(&|l| Ok(g(l)?.abs()), lam[k - 1], lam[k + 1], root_tol)?;
                let scale = (a.max(c) - b).max(1e-300);
                if fx.abs() < 1e-6 * (1.0 + scale) {
                    tangencies.push(x);
                }
            }
        }
    }
    edges.sort_by(f64::total_cmp);
    tangencies.sort_by(f64::total_cmp);
    if edges.is_empty() && tangencies.is_empty() {
        return Err(Error::WindowTooNarrow);
    }
    Ok(EdgeScan {
        edges,
        tangencies,
        samples: lam.into_iter().zip(vals).collect(),
    })
}

/// Band edges of a scalar periodic potential in the window (801-point scan).
pub fn floquet_band_edges(pot: &dyn Potential, period: f64, window: (f64, f64), root_tol: f64) -> Result<EdgeScan> {
    let opts = OdeOptions::default();
    band_edges_from(|l| discriminant(pot, period, 0.0, l, &opts), window, 801, root_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch::BandStructure;
    use crate::potential::{ConstantPotential, HochstadtSpec};

    #[test]
    fn constant_potential_edge() {
        let p = ConstantPotential {
            q: CMatrix::from_element(1, 1, cr(0.5)),
        };
        let period = 1.0;
        let d = discriminant(&p, period, 0.0, 3.0, &OdeOptions::default()).unwrap();
        assert!((d - 2.0 * (2.5f64.sqrt() * period).cos()).abs() < 1e-9);
        // next touch point is at λ = 0.5 + (2π)², outside the window
        let scan = floquet_band_edges(&p, period, (-1.0, 5.0), 1e-12).unwrap();
        let all: Vec<f64> = scan.edges.iter().chain(&scan.tangencies).copied().collect();
        assert_eq!(all.len(), 1, "{all:?}");
        assert!((all[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn window_too_narrow() {
        let p = ConstantPotential {
            q: CMatrix::from_element(1, 1, cr(0.0)),
        };
        assert!(matches!(floquet_band_edges(&p, 1.0, (1.0, 2.0), 1e-10), Err(Error::WindowTooNarrow)));
        assert!(matches!(band_edges_from(|_| Ok(0.0), (1.0, 1.0), 10, 1e-10), Err(Error::WindowTooNarrow)));
    }

    #[test]
    fn elliptic_edges_and_band_interior() {
        let b = BandStructure::new(vec![0.0, 1.0, 2.0]).unwrap();
        let p = HochstadtPotential::new(HochstadtSpec::scalar(b, 0.3).unwrap()).unwrap();
        let ch = channel(&p, 0);
        let period = p.period();
        let scan = floquet_band_edges(&ch, period, (-0.5, 3.5), 1e-12).unwrap();
        assert_eq!(scan.edges.len(), 3, "{:?}", scan.edges);
        for (got, want) in scan.edges.iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-6, "{got}");
        }
        for l in [0.5, 3.0] {
            assert!(discriminant(&ch, period, 0.0, l, &OdeOptions::default()).unwrap().abs() < 2.0);
        }
        assert!(discriminant(&ch, period, 0.0, 1.5, &OdeOptions::default()).unwrap().abs() > 2.0);
    }
}
