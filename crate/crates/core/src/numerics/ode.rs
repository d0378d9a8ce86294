//! Dormand-Prince 5(4) integrator with adaptive step control.
//!
//! Steps are clipped so that every requested sample time is hit exactly;
//! no interpolation is involved in the returned samples.

use crate::error::{Error, Result};
use crate::numerics::Interval;

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

// Fifth-order solution minus embedded fourth-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub y: Vec<f64>,
}

/// Integrates `y' = rhs(t, y)` from `iv.lo()` and reports the state at each
/// of `times` (sorted, inside `iv`).
pub fn ode_solve<F>(rhs: F, y0: &[f64], iv: Interval, times: &[f64], rel_tol: f64) -> Result<Vec<Sample>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    ode_solve_with(
        rhs,
        y0,
        iv,
        times,
        OdeOptions {
            rel_tol,
            abs_tol: rel_tol * 1e-2,
            ..Default::default()
        },
    )
}

pub fn ode_solve_with<F>(rhs: F, y0: &[f64], iv: Interval, times: &[f64], opts: OdeOptions) -> Result<Vec<Sample>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(opts.rel_tol > 0.0 && opts.rel_tol <= 1e-4) {
        return Err(Error::InvalidTolerance {
            value: opts.rel_tol,
            range: "(0, 1e-4]",
        });
    }
    for w in times.windows(2) {
        if w[1] < w[0] {
            return Err(Error::DimensionMismatch("sample times must be sorted".into()));
        }
    }
    if let Some(&t) = times.iter().find(|&&t| !iv.contains(t)) {
        return Err(Error::SampleOutOfRange { t });
    }

    let dim = y0.len();
    let mut t = iv.lo();
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; dim]; 7];
    let mut stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut out = Vec::with_capacity(times.len());

    let mut pending = times.iter().copied().peekable();
    while let Some(&ts) = pending.peek() {
        if ts > t {
            break;
        }
        out.push(Sample { t: ts, y: y.clone() });
        pending.next();
    }
    if pending.peek().is_none() {
        return Ok(out);
    }

    rhs(t, &y, &mut k[0]);
    let mut h = initial_step(&rhs, t, &y, &k[0], iv.width(), &opts);
    let mut steps = 0usize;

    while let Some(&target) = pending.peek() {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::TooManySteps { t });
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(iv.width()) {
            return Err(Error::StepUnderflow { t });
        }
        let hits_target = t + h >= target;
        let h_try = if hits_target { target - t } else { h };

        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().take(s).enumerate() {
                    acc += A[s][j] * kj[i];
                }
                stage[i] = y[i] + h_try * acc;
            }
            rhs(t + C[s] * h_try, &stage, &mut k[s]);
        }
        // The seventh stage is evaluated at the fifth-order solution (FSAL).
        y_new.copy_from_slice(&stage);

        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (h_try * e / scale).powi(2);
        }
        let err = (err_sq / dim.max(1) as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h = h_try * MIN_FACTOR;
            continue;
        }

        if err <= 1.0 {
            t = if hits_target { target } else { t + h_try };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            while let Some(&ts) = pending.peek() {
                if ts > t {
                    break;
                }
                out.push(Sample { t: ts, y: y.clone() });
                pending.next();
            }
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            // A clipped step says nothing about the natural step length.
            if !hits_target || h_try >= h {
                h = h_try * factor;
            }
        } else {
            h = h_try * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
    }
    Ok(out)
}

fn initial_step<F>(rhs: &F, t0: f64, y0: &[f64], f0: &[f64], span: f64, opts: &OdeOptions) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len().max(1) as f64;
    let scale = |y: f64| opts.abs_tol + opts.rel_tol * y.abs();
    let d0 = (y0.iter().map(|&y| (y / scale(y)).powi(2)).sum::<f64>() / dim).sqrt();
    let d1 = (y0.iter().zip(f0).map(|(&y, &f)| (f / scale(y)).powi(2)).sum::<f64>() / dim).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        (0.01 * d0 / d1).min(span)
    };
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(&y, &f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    rhs(t0 + h0, &y1, &mut f1);
    let d2 = (y0
        .iter()
        .zip(f0.iter().zip(&f1))
        .map(|(&y, (&a, &b))| ((b - a) / scale(y)).powi(2))
        .sum::<f64>()
        / dim)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6 * span)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}
