//! Scalar polynomial helpers (coefficients lowest power first).

use num_complex::Complex64;

pub fn eval_real(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

pub fn eval(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

pub fn from_roots(roots: &[f64]) -> Vec<f64> {
    let mut p = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; p.len() + 1];
        for (k, &a) in p.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= r * a;
        }
        p = next;
    }
    p
}

/// All complex roots via the Aberth–Ehrlich iteration (closed forms for degree ≤ 2).
pub fn roots(c: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<f64> = c.to_vec();
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
    let d = c.len() - 1;
    match d {
        0 => vec![],
        1 => vec![Complex64::new(-c[0] / c[1], 0.0)],
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * cc;
            if disc >= 0.0 {
                let q = -0.5 * (b + b.signum() * disc.sqrt());
                let q = if q == 0.0 { -0.5 * disc.sqrt() } else { q };
                let mut r = [q / a, if q != 0.0 { cc / q } else { 0.0 }];
                r.sort_by(f64::total_cmp);
                vec![Complex64::new(r[0], 0.0), Complex64::new(r[1], 0.0)]
            } else {
                let re = -b / (2.0 * a);
                let im = (-disc).sqrt() / (2.0 * a.abs());
                vec![Complex64::new(re, -im), Complex64::new(re, im)]
            }
        }
        _ => aberth(&c),
    }
}

fn aberth(c: &[f64]) -> Vec<Complex64> {
    let d = c.len() - 1;
    let lead = c[d];
    let cn: Vec<Complex64> = c.iter().map(|&a| Complex64::new(a / lead, 0.0)).collect();
    let dc: Vec<Complex64> = (1..=d).map(|k| cn[k] * k as f64).collect();
    let radius = 1.0 + cn[..d].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / d as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..d {
            let p = eval(&cn, z[i]);
            let dp = eval(&dc, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..d).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            z[i] -= step;
            moved = moved.max(step.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z.sort_by(|a, b| a.re.total_cmp(&b.re));
    z
}

/// Real parts of the roots, if all are real to within `tol` relative.
pub fn real_roots(c: &[f64], tol: f64) -> Option<Vec<f64>> {
    let r = roots(c);
    let scale = r.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if r.iter().all(|z| z.im.abs() <= tol * scale) {
        let mut v: Vec<f64> = r.iter().map(|z| z.re).collect();
        v.sort_by(f64::total_cmp);
        Some(v)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_real_and_complex() {
        let r = real_roots(&from_roots(&[1.0, 3.0]), 1e-12).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15 && (r[1] - 3.0).abs() < 1e-15);
        assert!(real_roots(&[1.0, 0.0, 1.0], 1e-12).is_none());
    }

    proptest! {
        #[test]
        fn recovers_distinct_real_roots(a in -5.0f64..5.0, gap1 in 0.1f64..3.0, gap2 in 0.1f64..3.0, gap3 in 0.1f64..3.0) {
            let want = [a, a + gap1, a + gap1 + gap2, a + gap1 + gap2 + gap3];
            let got = real_roots(&from_roots(&want), 1e-8).unwrap();
            for (g, w) in got.iter().zip(want.iter()) {
                prop_assert!((g - w).abs() < 1e-8);
            }
        }
    }
}
