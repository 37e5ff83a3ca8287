//! Adaptive Dormand–Prince 5(4) for complex first-order systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            atol: 1e-11,
            rtol: 1e-11,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates y′ = f(x, y) from x0 and returns y at each checkpoint.
/// Checkpoints must be monotone in one direction away from x0 (backward integration allowed).
pub fn integrate<F>(mut f: F, x0: f64, y0: &[Complex64], checkpoints: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<Complex64>>>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let Some(&last) = checkpoints.last() else {
        return Ok(Vec::new());
    };
    let dir = if last >= x0 { 1.0 } else { -1.0 };
    if checkpoints
        .iter()
        .scan(x0, |prev, &x| {
            let ok = (x - *prev) * dir >= 0.0;
            *prev = x;
            Some(ok)
        })
        .any(|ok| !ok)
    {
        return Err(Error::Invalid("checkpoints are not monotone".into()));
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut ynew = vec![Complex64::new(0.0, 0.0); n];
    f(x, &y, &mut k[0]);
    let span = (last - x0).abs().max(1e-300);
    let mut h = (span * 1e-3).max(1e-6).min(span) * dir;
    let mut steps = 0usize;
    for &target in checkpoints {
        while (target - x) * dir > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepUnderflow(x));
            }
            let remaining = target - x;
            let clipped = remaining.abs() <= h.abs() * 1.000001;
            let hs = if clipped { remaining } else { h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += kj[i] * (hs * A[s][j]);
                        }
                    }
                    tmp[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                f(x + C[s] * hs, &tmp, &mut tail[0]);
            }
            // stage 7 is evaluated at the 5th-order solution (FSAL)
            ynew.copy_from_slice(&tmp);
            let mut err = 0.0;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for j in 0..7 {
                    e += k[j][i] * (B5[j] - B4[j]);
                }
                let sc = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
                err += (e.norm() * hs.abs() / sc).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                h = hs * 0.25;
            } else if err <= 1.0 {
                x = if clipped { target } else { x + hs };
                std::mem::swap(&mut y, &mut ynew);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !clipped || fac < 1.0 {
                    h = hs * fac;
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
            if h.abs() < 1e-14 * (1.0 + x.abs()) {
                return Err(Error::StepUnderflow(x));
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
