//! Truncated derivative stacks [A, A′, …, A⁽ᵏ⁾] of matrix functions at one point.

use crate::linalg::{cr, CMatrix};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct MatJet {
    pub d: Vec<CMatrix>,
}

fn binomials(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n + 1 - k) as f64 / k as f64;
    }
    row
}

impl MatJet {
    pub fn new(d: Vec<CMatrix>) -> Self {
        assert!(!d.is_empty(), "a jet needs at least the value");
        MatJet { d }
    }

    pub fn zeros(m: usize, order: usize) -> Self {
        MatJet {
            d: vec![CMatrix::zeros(m, m); order + 1],
        }
    }

    pub fn constant(a: CMatrix, order: usize) -> Self {
        let m = a.nrows();
        let mut d = vec![CMatrix::zeros(m, m); order + 1];
        d[0] = a;
        MatJet { d }
    }

    pub fn order(&self) -> usize {
        self.d.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.d[0].nrows()
    }

    pub fn value(&self) -> &CMatrix {
        &self.d[0]
    }

    /// The derivative; loses one order.
    pub fn deriv(&self) -> MatJet {
        if self.d.len() == 1 {
            return MatJet::zeros(self.dim(), 0);
        }
        MatJet { d: self.d[1..].to_vec() }
    }

    pub fn truncate(&self, order: usize) -> MatJet {
        MatJet {
            d: self.d[..=order.min(self.order())].to_vec(),
        }
    }

    pub fn add(&self, o: &MatJet) -> MatJet {
        let k = self.order().min(o.order());
        MatJet {
            d: (0..=k).map(|i| &self.d[i] + &o.d[i]).collect(),
        }
    }

    pub fn sub(&self, o: &MatJet) -> MatJet {
        let k = self.order().min(o.order());
        MatJet {
            d: (0..=k).map(|i| &self.d[i] - &o.d[i]).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> MatJet {
        MatJet {
            d: self.d.iter().map(|a| a * s).collect(),
        }
    }

    /// Leibniz rule, truncated to the lower order.
    pub fn mul(&self, o: &MatJet) -> MatJet {
        let k = self.order().min(o.order());
        let d = (0..=k)
            .map(|j| {
                let c = binomials(j);
                (0..=j).fold(CMatrix::zeros(self.dim(), o.d[0].ncols()), |acc, i| {
                    acc + &self.d[i] * &o.d[j - i] * cr(c[i])
                })
            })
            .collect();
        MatJet { d }
    }

    /// Evaluate the Taylor polynomial at offset h.
    pub fn taylor(&self, h: f64) -> CMatrix {
        let mut acc = CMatrix::zeros(self.dim(), self.d[0].ncols());
        let mut f = 1.0;
        for (k, a) in self.d.iter().enumerate() {
            if k > 0 {
                f *= h / k as f64;
            }
            acc += a * cr(f);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, fnorm};

    // A(x) = [[x², e^x],[sin x, 1]] at x = 0.3
    fn jet_a(order: usize) -> MatJet {
        let x: f64 = 0.3;
        let d = (0..=order)
            .map(|k| {
                let p = match k {
                    0 => x * x,
                    1 => 2.0 * x,
                    2 => 2.0,
                    _ => 0.0,
                };
                let s = [x.sin(), x.cos(), -x.sin(), -x.cos()][k % 4];
                CMatrix::from_row_slice(2, 2, &[cr(p), cr(x.exp()), cr(s), cr(if k == 0 { 1.0 } else { 0.0 })])
            })
            .collect();
        MatJet::new(d)
    }

    #[test]
    fn product_rule_matches_taylor() {
        let a = jet_a(6);
        let b = a.scale(c(0.5, -1.0)).add(&MatJet::constant(CMatrix::identity(2, 2), 6));
        let p = a.mul(&b);
        let h = 1e-2;
        let direct = a.taylor(h) * b.taylor(h);
        assert!(fnorm(&(p.taylor(h) - direct)) < 1e-12);
        assert_eq!(p.order(), 6);
        assert_eq!(p.deriv().order(), 5);
    }

    #[test]
    fn derivative_shift() {
        let a = jet_a(4);
        assert!(fnorm(&(&a.deriv().d[0] - &a.d[1])) == 0.0);
        assert_eq!(a.truncate(2).order(), 2);
        assert_eq!(binomials(4), vec![1.0, 4.0, 6.0, 4.0, 1.0]);
    }
}
