//! Independent checks on the analytic machinery and the sweep drivers that
//! produce figure data.
//!
//! * [`ermakov_forward`] integrates the Ermakov equation for a given trap
//!   frequency and is used to certify the endpoint conditions.
//! * [`variance_oracle`] builds the expanding mode on a spatial grid and
//!   applies a finite-difference Hamiltonian, bypassing the moment formulas.
//! * The `scan_*` functions evaluate many specs in parallel and fit power
//!   laws over the lowest decade of the sweep.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energetics::{
    aa_lower_bound, bang_bang_energy, energy_bound, energy_bound_asymptotic, energy_with_frequency,
    min_time_from_budget, time_averaged_energy, time_averaged_std, windowed_energy, EnergyUnits,
};
use crate::error::{Error, Result};
use crate::numerics::{fit_power_law, linspace, ode_solve, FitResult, Interval};
use crate::trajectories::{
    bang_bang_min_time, bang_bang_single, make_hybrid, make_polynomial, omega_squared_from_b, ExpansionSpec,
    FrequencyProfile, ScalingTrajectory, CHECK_GRID, HBAR,
};

/// Relative tolerance of the forward Ermakov integration.
pub const FORWARD_TOL: f64 = 1e-10;

/// Half-extent of the oracle grid in units of the amplitude width
/// `b sqrt(hbar / m omega0)` of the ground state, stretched by `sqrt(2n + 1)`
/// for excited levels.
pub const GRID_HALF_WIDTH: f64 = 8.0;

/// Resolution of the coarser oracle grid; the finer one doubles it.
pub const POINTS_PER_OSCILLATION: f64 = 64.0;

/// Maximum relative disagreement between the two oracle resolutions.
pub const CONVERGENCE_TOL: f64 = 1e-3;

pub const MAX_ORACLE_LEVEL: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmakovSample {
    pub t: f64,
    pub b: f64,
    pub bdot: f64,
}

/// Integrates `bddot + omega^2(t) b = omega0^2 / b^3` from `b = 1`,
/// `bdot = 0` and reports the solution at `CHECK_GRID` uniform times.
pub fn ermakov_forward(profile: &FrequencyProfile, spec: &ExpansionSpec) -> Result<Vec<ErmakovSample>> {
    let times = linspace(0.0, profile.duration(), CHECK_GRID);
    ermakov_forward_at(profile, spec, &times)
}

/// Same as [`ermakov_forward`] at caller-chosen sorted times.
pub fn ermakov_forward_at(
    profile: &FrequencyProfile,
    spec: &ExpansionSpec,
    times: &[f64],
) -> Result<Vec<ErmakovSample>> {
    if profile.omega0() != spec.omega0 {
        return Err(Error::SpecMismatch);
    }
    let duration = profile.duration();
    let w0sq = spec.omega0 * spec.omega0;
    // Normalised time keeps the state O(gamma) whatever the duration.
    let s_times: Vec<f64> = times.iter().map(|&t| (t / duration).min(1.0)).collect();
    let breaks: Vec<f64> = profile.breakpoints().iter().map(|&t| t / duration).collect();

    let mut state = [1.0, 0.0];
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0;
    for seg in breaks.windows(2) {
        let (lo, hi) = (seg[0], seg[1].min(1.0));
        if hi <= lo {
            continue;
        }
        // Stepwise profiles are constant on each segment; probe the interior
        // so a switching instant is never attributed to the wrong side.
        let probe = match profile {
            FrequencyProfile::Stepwise { .. } => Some(profile.omega_squared(0.5 * (lo + hi) * duration)?),
            FrequencyProfile::Designed { .. } => None,
        };
        let omega_sq = |s: f64| match probe {
            Some(w) => w,
            None => profile
                .omega_squared(s.clamp(lo, hi) * duration)
                .expect("segment lies inside the profile"),
        };
        let rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = duration * duration * (-omega_sq(s) * y[0] + w0sq / y[0].powi(3));
        };
        let mut targets: Vec<f64> = Vec::new();
        let first = next;
        while next < s_times.len() && s_times[next] <= hi {
            targets.push(s_times[next].max(lo));
            next += 1;
        }
        targets.push(hi);
        let sol = ode_solve(rhs, &state, Interval::new(lo, hi)?, &targets, FORWARD_TOL).map_err(|e| match e {
            Error::StepUnderflow { t } | Error::TooManySteps { t } | Error::OdeNonFinite { t } => {
                Error::ErmakovSingularity { t: t * duration }
            }
            other => other,
        })?;
        for (i, sample) in sol[..sol.len() - 1].iter().enumerate() {
            out.push(ErmakovSample {
                t: times[first + i],
                b: sample.y[0],
                bdot: sample.y[1] / duration,
            });
        }
        let end = &sol[sol.len() - 1].y;
        if !(end[0] > 0.0 && end[0].is_finite()) {
            return Err(Error::ErmakovSingularity { t: hi * duration });
        }
        state = [end[0], end[1]];
    }
    Ok(out)
}

/// Endpoint residuals of a forward integration through a designed profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    /// `|b(tf) - gamma| / gamma`
    pub residual_b: f64,
    /// `|bdot(tf)| tf`
    pub residual_bdot: f64,
    /// Largest relative deviation from the designed `b` over the samples.
    pub max_deviation: f64,
    pub passed: bool,
}

pub fn roundtrip_check(spec: &ExpansionSpec, traj: &ScalingTrajectory, tol: f64) -> Result<RoundtripReport> {
    if !(1e-10..=1e-3).contains(&tol) {
        return Err(Error::InvalidTolerance {
            value: tol,
            range: "[1e-10, 1e-3]",
        });
    }
    if traj.spec().omega0 != spec.omega0 || traj.spec().omegaf != spec.omegaf {
        return Err(Error::SpecMismatch);
    }
    let profile = omega_squared_from_b(traj)?;
    let samples = ermakov_forward(&profile, spec)?;
    let mut max_deviation = 0.0_f64;
    for s in &samples {
        let designed = traj.eval(s.t)?.b;
        max_deviation = max_deviation.max(((s.b - designed) / designed).abs());
    }
    let end = samples.last().expect("at least two samples");
    let gamma = spec.gamma();
    let residual_b = (end.b - gamma).abs() / gamma;
    let residual_bdot = end.bdot.abs() * traj.duration();
    Ok(RoundtripReport {
        residual_b,
        residual_bdot,
        max_deviation,
        passed: residual_b < tol && residual_bdot < tol,
    })
}

/// Forward integration of the single-step bang-bang schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BangBangReport {
    pub duration: f64,
    pub residual_b: f64,
    pub residual_bdot: f64,
    /// Constant energy expected during the step.
    pub expected_energy: f64,
    /// Largest relative deviation of the sampled energy from it.
    pub max_energy_deviation: f64,
}

pub fn bang_bang_check(spec: &ExpansionSpec) -> Result<BangBangReport> {
    let schedule = bang_bang_single(spec);
    let profile = schedule.profile();
    let samples = ermakov_forward(&profile, spec)?;
    let expected = bang_bang_energy(spec);
    let omega_sq = schedule.segments[0].omega.powi(2);
    let max_energy_deviation = samples
        .iter()
        .map(|s| ((energy_with_frequency(spec, s.b, s.bdot, omega_sq) - expected) / expected).abs())
        .fold(0.0, f64::max);
    let end = samples.last().expect("at least two samples");
    let gamma = spec.gamma();
    let duration = schedule.total_time();
    Ok(BangBangReport {
        duration,
        residual_b: (end.b - gamma).abs() / gamma,
        residual_bdot: end.bdot.abs() * duration,
        expected_energy: expected,
        max_energy_deviation,
    })
}

/// The expanding mode `psi_n` sampled on a uniform grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub x0: f64,
    pub dx: f64,
    pub amplitudes: Vec<Complex64>,
    /// Discrete norm before normalisation.
    pub raw_norm: f64,
}

impl GridState {
    /// Builds `b^{-1/2} phi_n(x / b) exp(i m bdot x^2 / (2 hbar b))` with
    /// `phi_n` the `n`-th eigenfunction of the initial trap.
    pub fn expanding_mode(spec: &ExpansionSpec, b: f64, bdot: f64, points_per_oscillation: f64) -> Result<Self> {
        if spec.n > MAX_ORACLE_LEVEL {
            return Err(Error::OracleQuantumNumber { n: spec.n });
        }
        let n = spec.n as usize;
        let m = spec.mass;
        let ell = b * (HBAR / (m * spec.omega0)).sqrt();
        let half = GRID_HALF_WIDTH * ell * (2.0 * spec.n as f64 + 1.0).sqrt();
        // fastest local oscillation: chirp at the grid edge plus the
        // envelope's own nodes
        let chirp = m * bdot.abs() * half / (HBAR * b);
        let envelope = (2.0 * spec.n as f64 + 1.0).sqrt() / ell;
        let k_max = chirp + envelope;
        let dx = 2.0 * std::f64::consts::PI / (points_per_oscillation * k_max);
        let points = (2.0 * half / dx).ceil() as usize + 1;
        let dx = 2.0 * half / (points - 1) as f64;
        let x0 = -half;

        let mut amplitudes = Vec::with_capacity(points);
        let norm0 = 1.0 / (ell.sqrt() * std::f64::consts::PI.powf(0.25));
        let mut raw = 0.0;
        for i in 0..points {
            let x = x0 + i as f64 * dx;
            let xi = x / ell;
            let phi = hermite_function(n, xi) * norm0;
            let phase = m * bdot * x * x / (2.0 * HBAR * b);
            let z = Complex64::from_polar(phi, phase);
            raw += z.norm_sqr() * dx;
            amplitudes.push(z);
        }
        let scale = 1.0 / raw.sqrt();
        for z in &mut amplitudes {
            *z *= scale;
        }
        Ok(Self {
            x0,
            dx,
            amplitudes,
            raw_norm: raw,
        })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }

    /// `H psi` with a five-point Laplacian and zero amplitude off the grid.
    fn apply_hamiltonian(&self, mass: f64, omega_sq: f64) -> Vec<Complex64> {
        let psi = &self.amplitudes;
        let len = psi.len();
        let at = |i: isize| -> Complex64 {
            if i < 0 || i as usize >= len {
                Complex64::new(0.0, 0.0)
            } else {
                psi[i as usize]
            }
        };
        let kinetic = -HBAR * HBAR / (2.0 * mass) / (12.0 * self.dx * self.dx);
        (0..len)
            .map(|i| {
                let j = i as isize;
                let lap = -at(j - 2) + 16.0 * at(j - 1) - 30.0 * at(j) + 16.0 * at(j + 1) - at(j + 2);
                let x = self.x0 + i as f64 * self.dx;
                lap * kinetic + psi[i] * (0.5 * mass * omega_sq * x * x)
            })
            .collect()
    }

    /// `(<H>, <H^2> - <H>^2)` for the trap `omega_sq`, evaluated as the
    /// squared norm of `(H - <H>) psi`.
    pub fn energy_moments(&self, mass: f64, omega_sq: f64) -> (f64, f64) {
        let h_psi = self.apply_hamiltonian(mass, omega_sq);
        let mean: f64 = self
            .amplitudes
            .iter()
            .zip(&h_psi)
            .map(|(p, h)| (p.conj() * h).re)
            .sum::<f64>()
            * self.dx;
        let variance = self
            .amplitudes
            .iter()
            .zip(&h_psi)
            .map(|(p, h)| (h - p * mean).norm_sqr())
            .sum::<f64>()
            * self.dx;
        (mean, variance)
    }
}

// Normalised Hermite function without the length scale: H_n(x) e^{-x^2/2}
// divided by sqrt(2^n n!) (the pi^{-1/4} factor is applied by the caller).
fn hermite_function(n: usize, x: f64) -> f64 {
    let gauss = (-0.5 * x * x).exp();
    let mut prev = 0.0;
    let mut cur = gauss;
    for k in 0..n {
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * x * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Energy standard deviation of the expanding mode with width `b`, rate
/// `bdot`, in a trap `omega_sq`, by brute force on two grids.
pub fn variance_oracle_state(spec: &ExpansionSpec, b: f64, bdot: f64, omega_sq: f64) -> Result<f64> {
    let coarse = GridState::expanding_mode(spec, b, bdot, POINTS_PER_OSCILLATION)?;
    let fine = GridState::expanding_mode(spec, b, bdot, 2.0 * POINTS_PER_OSCILLATION)?;
    let (mean_c, var_c) = coarse.energy_moments(spec.mass, omega_sq);
    let (_, var_f) = fine.energy_moments(spec.mass, omega_sq);
    let (std_c, std_f) = (var_c.max(0.0).sqrt(), var_f.max(0.0).sqrt());
    // Near eigenstates the spread is tiny; judge it against the energy scale.
    let floor = 1e-5 * (mean_c.abs() + HBAR * spec.omega0);
    if (std_c - std_f).abs() > CONVERGENCE_TOL * std_f + floor {
        return Err(Error::UnresolvedGrid {
            coarse: std_c,
            fine: std_f,
        });
    }
    // The stencil error is O(dx^4); halving dx lets it be eliminated.
    let extrapolated = (16.0 * var_f - var_c) / 15.0;
    Ok(extrapolated.max(0.0).sqrt())
}

/// [`variance_oracle_state`] along a designed trajectory at time `t`, in the
/// trap the Ermakov equation assigns to it.
pub fn variance_oracle(spec: &ExpansionSpec, traj: &ScalingTrajectory, t: f64) -> Result<f64> {
    if traj.spec().omega0 != spec.omega0 || traj.spec().omegaf != spec.omegaf {
        return Err(Error::SpecMismatch);
    }
    let st = traj.eval(t)?;
    let omega_sq = spec.omega0 * spec.omega0 / st.b.powi(4) - st.bddot / st.b;
    variance_oracle_state(spec, st.b, st.bdot, omega_sq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    /// One coordinate per axis.
    pub coords: Vec<f64>,
    /// One value per column.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<ScanRow>,
    /// Power-law fits keyed by column name.
    pub fits: BTreeMap<String, FitResult>,
}

impl ScanResult {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    /// Coordinates along the first axis.
    pub fn xs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.coords[0]).collect()
    }

    /// Fits every column against the first axis over `[x_min, 10 x_min]`.
    fn fit_lowest_decade(&mut self) -> Result<()> {
        let xs = self.xs();
        let Some(lo) = xs.iter().copied().reduce(f64::min) else {
            return Ok(());
        };
        let window: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] <= 10.0 * lo * (1.0 + 1e-9)).collect();
        if window.len() < 3 {
            return Ok(());
        }
        for (k, name) in self.columns.iter().enumerate() {
            let pts: Vec<(f64, f64)> = window.iter().map(|&i| (xs[i], self.rows[i].values[k])).collect();
            self.fits.insert(name.clone(), fit_power_law(&pts)?);
        }
        Ok(())
    }
}

fn check_sweep(values: &[f64], what: &str) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::InvalidSweep(format!("{what}: need at least two values")));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidSweep(format!("{what}: values must be positive")));
    }
    let rising = values.windows(2).all(|w| w[1] > w[0]);
    let falling = values.windows(2).all(|w| w[1] < w[0]);
    if !(rising || falling) {
        return Err(Error::InvalidSweep(format!("{what}: values must be strictly monotone")));
    }
    Ok(())
}

/// Maps `f` over `items` in parallel, keeping input order. The optional
/// `STA_THREADS` environment variable caps the worker count.
fn par_map<T, F>(items: &[f64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync + Send,
{
    let run = || items.par_iter().map(|&x| f(x)).collect::<Result<Vec<T>>>();
    let threads = std::env::var("STA_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok());
    match threads {
        Some(k) if k > 0 => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        _ => run(),
    }
}

fn sweep_columns(spec: &ExpansionSpec) -> Vec<String> {
    let mut cols = vec!["bound", "asymptotic", "poly_energy", "poly_std"];
    if spec.n == 0 {
        cols.push("aa_bound");
    }
    cols.into_iter().map(String::from).collect()
}

fn sweep_row(spec: &ExpansionSpec, units: EnergyUnits) -> Result<Vec<f64>> {
    let k = units.scale(spec);
    let poly = make_polynomial(spec);
    let mut values = vec![
        k * energy_bound(spec),
        k * energy_bound_asymptotic(spec),
        k * time_averaged_energy(spec, &poly)?,
        k * time_averaged_std(spec, &poly)?,
    ];
    if spec.n == 0 {
        values.push(k * aa_lower_bound(spec)?);
    }
    Ok(values)
}

fn sweep(
    spec: &ExpansionSpec,
    axis: &str,
    values: &[f64],
    units: EnergyUnits,
    build: impl Fn(f64) -> Result<ExpansionSpec> + Sync + Send,
) -> Result<ScanResult> {
    check_sweep(values, axis)?;
    let rows = par_map(values, |x| {
        Ok(ScanRow {
            coords: vec![x],
            values: sweep_row(&build(x)?, units)?,
        })
    })?;
    let mut result = ScanResult {
        axes: vec![axis.to_string()],
        columns: sweep_columns(spec),
        rows,
        fits: BTreeMap::new(),
    };
    result.fit_lowest_decade()?;
    Ok(result)
}

/// Bound, asymptote, polynomial energy and spread, and AA bound versus
/// duration.
pub fn scan_tf(spec: &ExpansionSpec, tf_values: &[f64], units: EnergyUnits) -> Result<ScanResult> {
    sweep(spec, "tf_s", tf_values, units, |tf| spec.with_tf(tf))
}

/// As [`scan_tf`] versus final angular frequency.
pub fn scan_wf(spec: &ExpansionSpec, wf_values: &[f64], units: EnergyUnits) -> Result<ScanResult> {
    sweep(spec, "omegaf_rad_s", wf_values, units, |wf| spec.with_omegaf(wf))
}

/// Hybrid time average split into cap and centre contributions.
pub fn hybrid_tau_scan(spec: &ExpansionSpec, tau_values: &[f64], units: EnergyUnits) -> Result<ScanResult> {
    check_sweep(tau_values, "tau")?;
    if let Some(&tau) = tau_values.iter().find(|&&t| t >= 0.5) {
        return Err(Error::TauOutOfRange(tau));
    }
    let k = units.scale(spec);
    let bound = energy_bound(spec);
    let tf = spec.tf;
    let rows = par_map(tau_values, |tau| {
        let traj = make_hybrid(spec, tau)?;
        let total = time_averaged_energy(spec, &traj)?;
        let (a, b) = (tau * tf, (1.0 - tau) * tf);
        let caps = windowed_energy(spec, &traj, 0.0, a)? + windowed_energy(spec, &traj, b, tf)?;
        let central = windowed_energy(spec, &traj, a, b)?;
        Ok(ScanRow {
            coords: vec![tau],
            values: vec![k * total, k * caps, k * central, k * bound],
        })
    })?;
    Ok(ScanResult {
        axes: vec!["tau".into()],
        columns: ["total", "caps", "central", "bound"].map(String::from).to_vec(),
        rows,
        fits: BTreeMap::new(),
    })
}

/// How the expansion time of the refrigerator stroke depends on `omegaf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum TimeLaw {
    /// Shortest time whose energy bound stays within `budget` (raw units).
    Budget { budget: f64 },
    /// Minimal real-frequency bang-bang time.
    BangBangMinTime,
    /// Quarter period at the geometric-mean frequency.
    QuarterPeriod,
    /// `tf = prefactor * omegaf^exponent`
    PowerLaw { prefactor: f64, exponent: f64 },
}

impl TimeLaw {
    pub fn duration(&self, spec: &ExpansionSpec) -> Result<f64> {
        match *self {
            Self::Budget { budget } => min_time_from_budget(spec, budget),
            Self::BangBangMinTime => bang_bang_min_time(spec),
            Self::QuarterPeriod => Ok(bang_bang_single(spec).total_time()),
            Self::PowerLaw { prefactor, exponent } => {
                let tf = prefactor * spec.omegaf.powf(exponent);
                if tf > 0.0 && tf.is_finite() {
                    Ok(tf)
                } else {
                    Err(Error::InvalidSweep(format!("power law gives tf = {tf}")))
                }
            }
        }
    }
}

/// Cooling rate `R = omegaf / tf` along a family of final frequencies,
/// with the fitted exponent of `R` in `omegaf`.
pub fn otto_scaling(spec: &ExpansionSpec, law: TimeLaw, wf_values: &[f64]) -> Result<ScanResult> {
    check_sweep(wf_values, "omegaf")?;
    let rows = par_map(wf_values, |wf| {
        let s = spec.with_omegaf(wf)?;
        let tf = law.duration(&s)?;
        Ok(ScanRow {
            coords: vec![wf],
            values: vec![tf, wf / tf],
        })
    })?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.coords[0], r.values[1])).collect();
    let mut fits = BTreeMap::new();
    if pts.len() >= 3 {
        fits.insert("rate".to_string(), fit_power_law(&pts)?);
    }
    Ok(ScanResult {
        axes: vec!["omegaf_rad_s".into()],
        columns: vec!["tf_s".into(), "rate".into()],
        rows,
        fits,
    })
}

/// Energy bound over a `(tf, omegaf)` grid, `tf`-major.
pub fn grid_fig1(spec: &ExpansionSpec, tf_values: &[f64], wf_values: &[f64], units: EnergyUnits) -> Result<ScanResult> {
    check_sweep(tf_values, "tf")?;
    check_sweep(wf_values, "omegaf")?;
    let k = units.scale(spec);
    let mut rows = Vec::with_capacity(tf_values.len() * wf_values.len());
    for &tf in tf_values {
        let line = par_map(wf_values, |wf| {
            let s = spec.with_tf(tf)?.with_omegaf(wf)?;
            Ok(ScanRow {
                coords: vec![tf, wf],
                values: vec![k * energy_bound(&s)],
            })
        })?;
        rows.extend(line);
    }
    Ok(ScanResult {
        axes: vec!["tf_s".into(), "omegaf_rad_s".into()],
        columns: vec!["bound".into()],
        rows,
        fits: BTreeMap::new(),
    })
}
