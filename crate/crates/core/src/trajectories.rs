//! Scaling functions `b(t)` for population-preserving trap expansions and
//! compressions, the trap frequency they imply, and bang-bang schedules.
//!
//! Internally everything is expressed in the normalised time `s = t / t_f`;
//! derivatives are converted back to physical time on evaluation.
//! Units: hbar = 1, frequencies in rad/s.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{linspace, solve_linear, SquareMatrix};

/// Reduced Planck constant in internal units.
pub const HBAR: f64 = 1.0;

/// Number of uniform samples used for positivity and sign checks.
pub const CHECK_GRID: usize = 2001;

/// One expansion (or compression) problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSpec {
    pub omega0: f64,
    pub omegaf: f64,
    pub tf: f64,
    pub n: u32,
    pub mass: f64,
}

impl ExpansionSpec {
    pub fn new(omega0: f64, omegaf: f64, tf: f64, n: u32) -> Result<Self> {
        Self {
            omega0,
            omegaf,
            tf,
            n,
            mass: 1.0,
        }
        .validated()
    }

    /// Builds a spec from ordinary frequencies in Hz.
    pub fn from_hz(f0: f64, ff: f64, tf: f64, n: u32) -> Result<Self> {
        Self::new(2.0 * std::f64::consts::PI * f0, 2.0 * std::f64::consts::PI * ff, tf, n)
    }

    /// 250 Hz to 0.25 Hz in 2 ms, ground state.
    pub fn baseline() -> Self {
        Self::from_hz(250.0, 0.25, 2e-3, 0).expect("baseline parameters are valid")
    }

    pub fn with_mass(self, mass: f64) -> Result<Self> {
        Self { mass, ..self }.validated()
    }

    pub fn with_tf(self, tf: f64) -> Result<Self> {
        Self { tf, ..self }.validated()
    }

    pub fn with_omegaf(self, omegaf: f64) -> Result<Self> {
        Self { omegaf, ..self }.validated()
    }

    pub fn with_n(self, n: u32) -> Self {
        Self { n, ..self }
    }

    fn validated(self) -> Result<Self> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.omega0) {
            return Err(Error::InvalidSpec(format!("omega0 = {} must be > 0", self.omega0)));
        }
        if !positive(self.omegaf) {
            return Err(Error::InvalidSpec(format!("omegaf = {} must be > 0", self.omegaf)));
        }
        if !positive(self.tf) {
            return Err(Error::InvalidSpec(format!("tf = {} must be > 0", self.tf)));
        }
        if !positive(self.mass) {
            return Err(Error::InvalidSpec(format!("mass = {} must be > 0", self.mass)));
        }
        if !positive(self.gamma()) {
            return Err(Error::InvalidSpec("gamma is not finite".into()));
        }
        Ok(self)
    }

    /// Final-to-initial width ratio `sqrt(omega0 / omegaf)`.
    pub fn gamma(&self) -> f64 {
        (self.omega0 / self.omegaf).sqrt()
    }

    /// Initial ground-state energy `hbar omega0 / 2`, the reporting unit.
    pub fn e0_unit(&self) -> f64 {
        HBAR * self.omega0 / 2.0
    }

    /// `omega0 * tf`, the dimensionless duration.
    pub fn phase(&self) -> f64 {
        self.omega0 * self.tf
    }

    /// Swaps initial and final frequencies.
    pub fn reversed(&self) -> Self {
        Self {
            omega0: self.omegaf,
            omegaf: self.omega0,
            ..*self
        }
    }
}

/// `b` and its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleState {
    pub b: f64,
    pub bdot: f64,
    pub bddot: f64,
}

/// Closed-form Euler-Lagrange minimiser, `b(s)^2 = a s^2 + 2 B s + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiOptimal {
    /// `B = -1 + sqrt(gamma^2 + (omega0 tf)^2)`
    pub big_b: f64,
    /// `B^2 - (omega0 tf)^2`
    pub a: f64,
    /// `omega0 tf`
    pub w: f64,
}

impl QuasiOptimal {
    pub fn new(spec: &ExpansionSpec) -> Self {
        let w = spec.phase();
        let gamma = spec.gamma();
        let root = gamma.hypot(w);
        let big_b = root - 1.0;
        // (B - w)(B + w) with B - w rewritten to avoid cancellation
        let b_minus_w = (gamma * gamma - 1.0 - 2.0 * w) / (root + 1.0 + w);
        Self {
            big_b,
            a: b_minus_w * (big_b + w),
            w,
        }
    }

    pub fn radicand(&self, s: f64) -> f64 {
        (self.a * s + 2.0 * self.big_b) * s + 1.0
    }

    /// `(b, db/ds, d2b/ds2)` in normalised time.
    fn eval_s(&self, s: f64) -> [f64; 3] {
        let b = self.radicand(s).sqrt();
        let d1 = (self.a * s + self.big_b) / b;
        let d2 = -self.w * self.w / (b * b * b);
        [b, d1, d2]
    }

    /// Smallest radicand on `[lo, hi]`.
    fn min_radicand(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut best = (self.radicand(lo), lo);
        let end = (self.radicand(hi), hi);
        if end.0 < best.0 {
            best = end;
        }
        if self.a > 0.0 {
            let vertex = -self.big_b / self.a;
            if vertex > lo && vertex < hi {
                let v = self.radicand(vertex);
                if v < best.0 {
                    best = (v, vertex);
                }
            }
        }
        best
    }
}

/// Degree-5 cap polynomial in the local coordinate `u = |s - edge| / tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapPolynomial {
    pub coeffs: [f64; 6],
}

impl CapPolynomial {
    fn eval_u(&self, u: f64) -> [f64; 3] {
        let c = &self.coeffs;
        let mut p = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for j in (0..6).rev() {
            p = p * u + c[j];
        }
        for j in (1..6).rev() {
            d1 = d1 * u + j as f64 * c[j];
        }
        for j in (2..6).rev() {
            d2 = d2 * u + (j * (j - 1)) as f64 * c[j];
        }
        [p, d1, d2]
    }

    /// Solves for the cap that starts at `edge_value` with zero slope and
    /// curvature and meets `target` (value and derivatives with respect to
    /// `u`) at `u = 1`.
    fn matching(edge_value: f64, target: [f64; 3]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 2.0, 0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            vec![0.0, 0.0, 2.0, 6.0, 12.0, 20.0],
        ];
        let matrix = SquareMatrix::from_rows(&rows)?;
        let rhs = [edge_value, 0.0, 0.0, target[0], target[1], target[2]];
        let x = solve_linear(&matrix, &rhs)?;
        let mut coeffs = [0.0; 6];
        coeffs.copy_from_slice(&x);
        Ok(Self { coeffs })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrajectoryKind {
    /// `b = 1 + (gamma - 1)(10 s^3 - 15 s^4 + 6 s^5)`
    Polynomial,
    QuasiOptimal(QuasiOptimal),
    Hybrid {
        tau: f64,
        central: QuasiOptimal,
        left: CapPolynomial,
        right: CapPolynomial,
    },
    /// Free evolution at a single constant frequency (bang-bang segment).
    ConstantFrequency {
        omega: f64,
    },
}

/// An evaluable scaling function on `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTrajectory {
    spec: ExpansionSpec,
    kind: TrajectoryKind,
    duration: f64,
}

/// Fifth-order smoothstep used by the polynomial trajectory.
fn smoothstep(s: f64) -> [f64; 3] {
    let s2 = s * s;
    let p = s2 * s * (10.0 + s * (-15.0 + 6.0 * s));
    let d1 = 30.0 * s2 * (1.0 - s) * (1.0 - s);
    let d2 = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    [p, d1, d2]
}

impl ScalingTrajectory {
    pub fn spec(&self) -> &ExpansionSpec {
        &self.spec
    }

    pub fn kind(&self) -> &TrajectoryKind {
        &self.kind
    }

    /// Length of the time domain. Equals `spec.tf` except for bang-bang
    /// segments, whose duration is fixed by the frequency.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            TrajectoryKind::Polynomial => "poly",
            TrajectoryKind::QuasiOptimal(_) => "qopt",
            TrajectoryKind::Hybrid { .. } => "hybrid",
            TrajectoryKind::ConstantFrequency { .. } => "bang-bang",
        }
    }

    /// Whether the kind is built to meet the six endpoint conditions on
    /// `b`, `db/dt`, `d2b/dt2`.
    pub fn meets_endpoint_conditions(&self) -> bool {
        matches!(self.kind, TrajectoryKind::Polynomial | TrajectoryKind::Hybrid { .. })
    }

    /// Interior times where the definition switches pieces.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        if let TrajectoryKind::Hybrid { tau, .. } = self.kind {
            pts.push(tau * self.duration);
            pts.push((1.0 - tau) * self.duration);
        }
        pts.push(self.duration);
        pts.dedup();
        pts
    }

    /// Evaluates `(b, db/ds, d2b/ds2)` at normalised time `s`.
    pub fn eval_normalized(&self, s: f64) -> [f64; 3] {
        let gamma = self.spec.gamma();
        match &self.kind {
            TrajectoryKind::Polynomial => {
                let [p, d1, d2] = smoothstep(s);
                [1.0 + (gamma - 1.0) * p, (gamma - 1.0) * d1, (gamma - 1.0) * d2]
            }
            TrajectoryKind::QuasiOptimal(q) => q.eval_s(s),
            TrajectoryKind::Hybrid {
                tau,
                central,
                left,
                right,
            } => {
                if s < *tau {
                    let [p, d1, d2] = left.eval_u(s / tau);
                    [p, d1 / tau, d2 / (tau * tau)]
                } else if s > 1.0 - tau {
                    let [p, d1, d2] = right.eval_u((1.0 - s) / tau);
                    [p, -d1 / tau, d2 / (tau * tau)]
                } else {
                    central.eval_s(s)
                }
            }
            TrajectoryKind::ConstantFrequency { omega } => {
                // b^2 = cos^2(omega t) + (omega0/omega)^2 sin^2(omega t)
                let theta = omega * self.duration * s;
                let ratio2 = (self.spec.omega0 / omega).powi(2);
                let (sin, cos) = theta.sin_cos();
                let b2 = cos * cos + ratio2 * sin * sin;
                let b = b2.sqrt();
                let scale = omega * self.duration;
                let half_deriv = (ratio2 - 1.0) * sin * cos * scale;
                let d1 = half_deriv / b;
                let b2_dd = 2.0 * (ratio2 - 1.0) * (cos * cos - sin * sin) * scale * scale;
                let d2 = (0.5 * b2_dd - d1 * d1) / b;
                [b, d1, d2]
            }
        }
    }

    /// Evaluates `b`, `db/dt`, `d2b/dt2` at time `t` in `[0, duration]`.
    pub fn eval(&self, t: f64) -> Result<ScaleState> {
        let s = self.normalize(t)?;
        Ok(self.eval_at_normalized(s))
    }

    pub(crate) fn eval_at_normalized(&self, s: f64) -> ScaleState {
        let [b, d1, d2] = self.eval_normalized(s);
        ScaleState {
            b,
            bdot: d1 / self.duration,
            bddot: d2 / (self.duration * self.duration),
        }
    }

    pub(crate) fn normalize(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.duration;
        if !(t >= -slack && t <= self.duration + slack) {
            return Err(Error::TimeOutOfDomain {
                t,
                duration: self.duration,
            });
        }
        Ok((t / self.duration).clamp(0.0, 1.0))
    }

    /// `[|b(0) - 1|, |b'(0)|, |b''(0)|, |b(1) - gamma|, |b'(1)|, |b''(1)|]`
    /// with derivatives taken in normalised time.
    pub fn boundary_residuals(&self) -> [f64; 6] {
        let start = self.eval_normalized(0.0);
        let end = self.eval_normalized(1.0);
        [
            (start[0] - 1.0).abs(),
            start[1].abs(),
            start[2].abs(),
            (end[0] - self.spec.gamma()).abs(),
            end[1].abs(),
            end[2].abs(),
        ]
    }

    /// For hybrids, the global monomial coefficients `(c_j, d_j)` of the two
    /// caps written as polynomials in `s`.
    pub fn cap_coefficients(&self) -> Option<([f64; 6], [f64; 6])> {
        let TrajectoryKind::Hybrid { tau, left, right, .. } = &self.kind else {
            return None;
        };
        let mut c = [0.0; 6];
        for (j, cj) in c.iter_mut().enumerate() {
            *cj = left.coeffs[j] / tau.powi(j as i32);
        }
        // right cap: sum_j r_j ((1 - s)/tau)^j expanded in powers of s
        let mut d = [0.0; 6];
        for j in 0..6 {
            let scaled = right.coeffs[j] / tau.powi(j as i32);
            let mut binom = 1.0;
            for (k, dk) in d.iter_mut().enumerate().take(j + 1) {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                *dk += scaled * binom * sign;
                binom = binom * (j - k) as f64 / (k + 1) as f64;
            }
        }
        Some((c, d))
    }

    fn check_positive(self) -> Result<Self> {
        for s in linspace(0.0, 1.0, CHECK_GRID) {
            let b = self.eval_normalized(s)[0];
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::RejectedTrajectory {
                    reason: format!("b = {b} is not positive"),
                    t: s * self.duration,
                });
            }
        }
        Ok(self)
    }
}

/// Quintic interpolant meeting all six endpoint conditions.
pub fn make_polynomial(spec: &ExpansionSpec) -> ScalingTrajectory {
    // b stays between 1 and gamma because the smoothstep is monotone.
    ScalingTrajectory {
        spec: *spec,
        kind: TrajectoryKind::Polynomial,
        duration: spec.tf,
    }
}

/// Euler-Lagrange minimiser constrained only by `b(0) = 1`, `b(tf) = gamma`.
pub fn make_quasi_optimal(spec: &ExpansionSpec) -> Result<ScalingTrajectory> {
    let q = QuasiOptimal::new(spec);
    let (min, at) = q.min_radicand(0.0, 1.0);
    if !(min > 0.0) {
        return Err(Error::RejectedTrajectory {
            reason: format!("quasi-optimal radicand reaches {min:e}"),
            t: at * spec.tf,
        });
    }
    ScalingTrajectory {
        spec: *spec,
        kind: TrajectoryKind::QuasiOptimal(q),
        duration: spec.tf,
    }
    .check_positive()
}

/// Quasi-optimal centre on `[tau, 1 - tau]` joined to quintic caps that
/// restore the endpoint conditions.
pub fn make_hybrid(spec: &ExpansionSpec, tau: f64) -> Result<ScalingTrajectory> {
    if !(tau > 0.0 && tau < 0.5) {
        return Err(Error::TauOutOfRange(tau));
    }
    let central = QuasiOptimal::new(spec);
    let (min, at) = central.min_radicand(tau, 1.0 - tau);
    if !(min > 0.0) {
        return Err(Error::RejectedTrajectory {
            reason: format!("quasi-optimal radicand reaches {min:e}"),
            t: at * spec.tf,
        });
    }
    let [b, d1, d2] = central.eval_s(tau);
    let left = CapPolynomial::matching(1.0, [b, tau * d1, tau * tau * d2])?;
    let [b, d1, d2] = central.eval_s(1.0 - tau);
    let right = CapPolynomial::matching(spec.gamma(), [b, -tau * d1, tau * tau * d2])?;
    ScalingTrajectory {
        spec: *spec,
        kind: TrajectoryKind::Hybrid {
            tau,
            central,
            left,
            right,
        },
        duration: spec.tf,
    }
    .check_positive()
}

/// Trap frequency schedule, possibly with negative `omega^2`.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyProfile {
    /// `omega^2 = omega0^2 / b^4 - bddot / b`
    Designed {
        trajectory: ScalingTrajectory,
        has_repulsive_interval: bool,
    },
    /// Piecewise-constant frequencies.
    Stepwise { omega0: f64, schedule: BangBangSchedule },
}

impl FrequencyProfile {
    pub fn omega0(&self) -> f64 {
        match self {
            Self::Designed { trajectory, .. } => trajectory.spec.omega0,
            Self::Stepwise { omega0, .. } => *omega0,
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            Self::Designed { trajectory, .. } => trajectory.duration,
            Self::Stepwise { schedule, .. } => schedule.total_time(),
        }
    }

    pub fn has_repulsive_interval(&self) -> bool {
        match self {
            Self::Designed {
                has_repulsive_interval, ..
            } => *has_repulsive_interval,
            Self::Stepwise { .. } => false,
        }
    }

    /// Times where the profile may be non-smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Designed { trajectory, .. } => trajectory.breakpoints(),
            Self::Stepwise { schedule, .. } => {
                let mut pts = vec![0.0];
                let mut acc = 0.0;
                for seg in &schedule.segments {
                    acc += seg.duration;
                    pts.push(acc);
                }
                pts
            }
        }
    }

    pub fn omega_squared(&self, t: f64) -> Result<f64> {
        match self {
            Self::Designed { trajectory, .. } => {
                let s = trajectory.normalize(t)?;
                Ok(designed_omega_squared(trajectory, s))
            }
            Self::Stepwise { schedule, .. } => {
                let total = schedule.total_time();
                if !(t >= 0.0 && t <= total * (1.0 + 1e-12)) {
                    return Err(Error::TimeOutOfDomain { t, duration: total });
                }
                let mut acc = 0.0;
                for seg in &schedule.segments {
                    acc += seg.duration;
                    if t <= acc {
                        return Ok(seg.omega * seg.omega);
                    }
                }
                let last = schedule.segments.last().expect("schedule is non-empty");
                Ok(last.omega * last.omega)
            }
        }
    }
}

fn designed_omega_squared(traj: &ScalingTrajectory, s: f64) -> f64 {
    let st = traj.eval_at_normalized(s);
    let omega0 = traj.spec.omega0;
    omega0 * omega0 / st.b.powi(4) - st.bddot / st.b
}

/// Inverts the Ermakov equation for the trap frequency.
pub fn omega_squared_from_b(traj: &ScalingTrajectory) -> Result<FrequencyProfile> {
    let mut repulsive = false;
    for s in linspace(0.0, 1.0, CHECK_GRID) {
        let b = traj.eval_normalized(s)[0];
        if !(b > 0.0) {
            return Err(Error::RejectedTrajectory {
                reason: format!("b = {b} is not positive"),
                t: s * traj.duration,
            });
        }
        if designed_omega_squared(traj, s) < 0.0 {
            repulsive = true;
        }
    }
    Ok(FrequencyProfile::Designed {
        trajectory: traj.clone(),
        has_repulsive_interval: repulsive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BangBangSegment {
    pub duration: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BangBangSchedule {
    pub segments: Vec<BangBangSegment>,
    spec: ExpansionSpec,
}

impl BangBangSchedule {
    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn profile(&self) -> FrequencyProfile {
        FrequencyProfile::Stepwise {
            omega0: self.spec.omega0,
            schedule: self.clone(),
        }
    }

    /// Closed-form scaling function of the single-segment schedule.
    pub fn trajectory(&self) -> ScalingTrajectory {
        let seg = self.segments[0];
        ScalingTrajectory {
            spec: self.spec,
            kind: TrajectoryKind::ConstantFrequency { omega: seg.omega },
            duration: seg.duration,
        }
    }
}

/// One quarter period at the geometric-mean frequency.
pub fn bang_bang_single(spec: &ExpansionSpec) -> BangBangSchedule {
    let omega = (spec.omega0 * spec.omegaf).sqrt();
    BangBangSchedule {
        segments: vec![BangBangSegment {
            duration: FRAC_PI_2 / omega,
            omega,
        }],
        spec: *spec,
    }
}

/// Lower limit on the total time of real-frequency bang-bang expansions.
pub fn bang_bang_min_time(spec: &ExpansionSpec) -> Result<f64> {
    if spec.omegaf >= spec.omega0 {
        return Err(Error::NotAnExpansion);
    }
    Ok((1.0 - spec.omegaf / spec.omega0).sqrt() / (spec.omegaf * spec.omega0).sqrt())
}
