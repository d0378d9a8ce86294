//! Energetics of counterdiabatic driving for a positive frequency ramp.
//!
//! With the extra term `H1 = -(omega_dot / 4 omega)(q p + p q)` the system
//! follows the instantaneous eigenstates of the reference trap exactly, so
//! everything here is closed form apart from a few one-dimensional
//! quadratures. No state is propagated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_piecewise, linspace};
use crate::trajectories::{CHECK_GRID, HBAR};

/// Relative tolerance of the time averages.
pub const RAMP_TOL: f64 = 1e-12;

/// Monotone cubic Hermite interpolant through user samples of `omega(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledRamp {
    times: Vec<f64>,
    omega: Vec<f64>,
    slopes: Vec<f64>,
}

impl SampledRamp {
    /// `times` must start at 0 and increase strictly; every `omega` must be
    /// positive.
    pub fn new(times: &[f64], omega: &[f64]) -> Result<Self> {
        if times.len() != omega.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} times but {} frequencies",
                times.len(),
                omega.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InsufficientPoints { got: times.len() });
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidRamp("sample times must start at 0".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidRamp(
                "sample times must be finite and strictly increasing".into(),
            ));
        }
        if let Some((i, &w)) = omega.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::RampDomain { t: times[i], omega: w });
        }
        Ok(Self {
            times: times.to_vec(),
            omega: omega.to_vec(),
            slopes: pchip_slopes(times, omega),
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.times
    }

    fn duration(&self) -> f64 {
        *self.times.last().expect("at least two knots")
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let k = match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            i => (i - 1).min(self.times.len() - 2),
        };
        let h = self.times[k + 1] - self.times[k];
        let u = (t - self.times[k]) / h;
        let (y0, y1) = (self.omega[k], self.omega[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let value =
            (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1;
        let deriv = (6.0 * u2 - 6.0 * u) * y0
            + (3.0 * u2 - 4.0 * u + 1.0) * m0
            + (-6.0 * u2 + 6.0 * u) * y1
            + (3.0 * u2 - 2.0 * u) * m1;
        (value, deriv / h)
    }
}

// Fritsch-Carlson slopes with the usual one-sided end conditions.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// `omega(t)` on `[0, tf]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FrequencyRamp {
    /// `omega0 + (omegaf - omega0) t / tf`
    Linear {
        omega0: f64,
        omegaf: f64,
        tf: f64,
    },
    Sampled(SampledRamp),
}

impl FrequencyRamp {
    pub fn linear(omega0: f64, omegaf: f64, tf: f64) -> Result<Self> {
        if !(tf > 0.0 && tf.is_finite()) {
            return Err(Error::InvalidRamp(format!("tf = {tf} must be > 0")));
        }
        for (t, w) in [(0.0, omega0), (tf, omegaf)] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::RampDomain { t, omega: w });
            }
        }
        Ok(Self::Linear { omega0, omegaf, tf })
    }

    pub fn constant(omega: f64, tf: f64) -> Result<Self> {
        Self::linear(omega, omega, tf)
    }

    pub fn sampled(times: &[f64], omega: &[f64]) -> Result<Self> {
        SampledRamp::new(times, omega).map(Self::Sampled)
    }

    pub fn duration(&self) -> f64 {
        match self {
            Self::Linear { tf, .. } => *tf,
            Self::Sampled(r) => r.duration(),
        }
    }

    pub fn initial(&self) -> f64 {
        self.omega(0.0).expect("0 is in the domain")
    }

    pub fn final_value(&self) -> f64 {
        self.omega(self.duration()).expect("tf is in the domain")
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let tf = self.duration();
        if t >= 0.0 && t <= tf * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(Error::TimeOutOfDomain { t, duration: tf })
        }
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        match self {
            Self::Linear { omega0, omegaf, tf } => {
                let rate = (omegaf - omega0) / tf;
                (omega0 + rate * t, rate)
            }
            Self::Sampled(r) => r.eval(t),
        }
    }

    pub fn omega(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.eval(t).0)
    }

    pub fn omega_dot(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.eval(t).1)
    }

    /// Segment ends at which `omega_dot` changes sign, located by sampling
    /// and refined by bisection. Interpolation knots are included.
    pub fn monotone_breakpoints(&self) -> Vec<f64> {
        let tf = self.duration();
        let mut pts = vec![0.0, tf];
        if let Self::Sampled(r) = self {
            pts.extend_from_slice(r.knots());
        }
        let grid = linspace(0.0, tf, CHECK_GRID);
        let rate = |t: f64| self.eval(t).1;
        for w in grid.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            let (flo, fhi) = (rate(lo), rate(hi));
            if flo * fhi >= 0.0 {
                continue;
            }
            let lo_sign = flo.signum();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if !(mid > lo && mid < hi) {
                    break;
                }
                if rate(mid).signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            pts.push(0.5 * (lo + hi));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

fn level(n: u32) -> f64 {
    n as f64 + 0.5
}

fn variance_factor(n: u32) -> f64 {
    let n = n as f64;
    (2.0 * (n * n + n + 1.0)).sqrt()
}

fn positive_omega(ramp: &FrequencyRamp, t: f64) -> Result<(f64, f64)> {
    ramp.check_time(t)?;
    let (w, wd) = ramp.eval(t);
    if !(w > 0.0) {
        return Err(Error::RampDomain { t, omega: w });
    }
    Ok((w, wd))
}

/// Coefficient `omega_dot / (4 omega)` of the squeezing term.
pub fn cd_coupling(ramp: &FrequencyRamp, t: f64) -> Result<f64> {
    let (w, wd) = positive_omega(ramp, t)?;
    Ok(wd / (4.0 * w))
}

/// Time average of `(n + 1/2) hbar omega(t)`.
pub fn mean_energy(ramp: &FrequencyRamp, n: u32) -> Result<f64> {
    let tf = ramp.duration();
    let integral = integrate_piecewise(|t| ramp.eval(t).0, &ramp.monotone_breakpoints(), RAMP_TOL)?;
    Ok(HBAR * level(n) * integral / tf)
}

/// Instantaneous energy standard deviation, all of it due to `H1`.
pub fn std_energy(ramp: &FrequencyRamp, n: u32, t: f64) -> Result<f64> {
    let (w, wd) = positive_omega(ramp, t)?;
    Ok(HBAR / 4.0 * wd.abs() / w * variance_factor(n))
}

pub fn time_avg_std(ramp: &FrequencyRamp, n: u32) -> Result<f64> {
    let tf = ramp.duration();
    let breaks = ramp.monotone_breakpoints();
    for &t in &breaks {
        positive_omega(ramp, t)?;
    }
    let integral = integrate_piecewise(
        |t| {
            let (w, wd) = ramp.eval(t);
            wd.abs() / w
        },
        &breaks,
        RAMP_TOL,
    )?;
    Ok(HBAR / (4.0 * tf) * variance_factor(n) * integral)
}

/// Closed form of [`time_avg_std`] for any ramp that never turns around.
pub fn monotone_std_closed_form(omega0: f64, omegaf: f64, tf: f64, n: u32) -> f64 {
    HBAR / (4.0 * tf) * variance_factor(n) * (omega0 / omegaf).ln().abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionlessReport {
    pub avg_energy: f64,
    pub avg_std: f64,
    pub instantaneous_std_max: f64,
    pub n: u32,
}

impl TransitionlessReport {
    pub fn compute(ramp: &FrequencyRamp, n: u32) -> Result<Self> {
        let mut max = 0.0_f64;
        for t in linspace(0.0, ramp.duration(), CHECK_GRID) {
            max = max.max(std_energy(ramp, n, t)?);
        }
        Ok(Self {
            avg_energy: mean_energy(ramp, n)?,
            avg_std: time_avg_std(ramp, n)?,
            instantaneous_std_max: max,
            n,
        })
    }
}
