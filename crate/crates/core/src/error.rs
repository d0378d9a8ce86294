use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]: bounds must be finite with lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("tolerance {value} outside the accepted range {range}")]
    InvalidTolerance { value: f64, range: &'static str },

    #[error("quadrature did not converge: best estimate {estimate:e} with error bound {error:e}")]
    QuadratureDiverged { estimate: f64, error: f64 },

    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },

    #[error("ODE step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("ODE state became non-finite at t = {t}")]
    OdeNonFinite { t: f64 },

    #[error("ODE step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },

    #[error("sample time {t} lies outside the integration interval")]
    SampleOutOfRange { t: f64 },

    #[error("matrix is singular or ill-conditioned (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("power-law fit needs at least 3 points, got {got}")]
    InsufficientPoints { got: usize },

    #[error("power-law fit requires strictly positive coordinates (point {index})")]
    NonPositiveCoordinate { index: usize },

    #[error("invalid expansion parameters: {0}")]
    InvalidSpec(String),

    #[error("rejected trajectory: {reason} (t = {t})")]
    RejectedTrajectory { reason: String, t: f64 },

    #[error("tau = {0} must lie in (0, 0.5)")]
    TauOutOfRange(f64),

    #[error("minimal bang-bang time is defined for expansions only (omega_f < omega_0)")]
    NotAnExpansion,

    #[error("time {t} outside the trajectory domain [0, {duration}]")]
    TimeOutOfDomain { t: f64, duration: f64 },

    #[error("time-average routes disagree: direct {direct:e}, reduced {reduced:e}")]
    IntegrationIdentity { direct: f64, reduced: f64 },

    #[error("quantity is defined for the ground state only (n = {n})")]
    GroundStateOnly { n: u32 },

    #[error("trajectory was built for a different expansion")]
    SpecMismatch,

    #[error("frequency ramp must stay positive: omega({t}) = {omega}")]
    RampDomain { t: f64, omega: f64 },

    #[error("invalid frequency ramp: {0}")]
    InvalidRamp(String),

    #[error("grid oracle unresolved: coarse {coarse:e} vs fine {fine:e}")]
    UnresolvedGrid { coarse: f64, fine: f64 },

    #[error("quantum number {n} exceeds the grid oracle limit of 4")]
    OracleQuantumNumber { n: u32 },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("forward Ermakov integration broke down at t = {t} (b collapsing or diverging)")]
    ErmakovSingularity { t: f64 },
}
