//! Dormand–Prince 5(4) integrator with dense-grid output.

use num_complex::Complex64;

use super::state::CVector;
use crate::error::{Error, Result};

/// Error-control settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            atol: tol,
            rtol: tol,
            ..Self::default()
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            atol: 1e-8,
            rtol: 1e-8,
            max_steps: 5_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn error_norm(err: &CVector, y0: &CVector, y1: &CVector, opts: &OdeOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &CVector, f0: &CVector, opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &CVector, &mut CVector),
{
    let zeros = CVector::zeros(y0.len());
    let d0 = error_norm(y0, y0, y0, opts);
    let d1 = error_norm(f0, y0, y0, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = y0 + f0 * Complex64::new(h0, 0.0);
    let mut f1 = zeros;
    f(t0 + h0, &y1, &mut f1);
    let d2 = error_norm(&(&f1 - f0), y0, y0, opts) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrate `dy/dt = f(t, y)` and return `y` at every point of `t_grid`.
///
/// `t_grid[0]` is the initial time. Steps are clipped to land on grid points.
pub fn integrate<F>(mut f: F, y0: CVector, t_grid: &[f64], opts: &OdeOptions) -> Result<Vec<CVector>>
where
    F: FnMut(f64, &CVector, &mut CVector),
{
    if let Some(index) = t_grid.windows(2).position(|w| !(w[1] >= w[0])) {
        return Err(Error::UnorderedTimeGrid { index: index + 1 });
    }
    let Some(&t_start) = t_grid.first() else {
        return Ok(Vec::new());
    };
    let n = y0.len();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(y0.clone());

    let mut t = t_start;
    let mut y = y0;
    let mut k: Vec<CVector> = (0..7).map(|_| CVector::zeros(n)).collect();
    f(t, &y, &mut k[0]);
    let mut h = match t_grid.last() {
        Some(&end) if end > t_start => initial_step(&mut f, t, &y, &k[0], opts),
        _ => 0.0,
    };
    let mut steps = 0usize;
    let mut ytmp = CVector::zeros(n);

    for &target in &t_grid[1..] {
        while t < target {
            let remaining = target - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h };
            if step < 1e-13 * t.abs().max(1.0) && !last {
                return Err(Error::StepUnderflow { time: t, step });
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepLimit { time: t, steps: opts.max_steps });
            }
            for s in 1..7 {
                ytmp.copy_from(&y);
                for (j, &a) in A[s].iter().enumerate().take(s) {
                    if a != 0.0 {
                        ytmp.axpy(Complex64::new(step * a, 0.0), &k[j], Complex64::new(1.0, 0.0));
                    }
                }
                f(t + C[s] * step, &ytmp, &mut k[s]);
            }
            // ytmp now holds the fifth-order solution (stage 7 argument)
            let mut err = CVector::zeros(n);
            for (j, &e) in E.iter().enumerate() {
                if e != 0.0 {
                    err.axpy(Complex64::new(step * e, 0.0), &k[j], Complex64::new(1.0, 0.0));
                }
            }
            let en = error_norm(&err, &y, &ytmp, opts);
            if en <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut ytmp);
                k.swap(0, 6);
                let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                let factor = if en.is_finite() { (0.9 * en.powf(-0.2)).clamp(0.1, 1.0) } else { 0.1 };
                h = step * factor;
                if h < 1e-13 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { time: t, step: h });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
