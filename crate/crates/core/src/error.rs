use core::fmt;

/// Failures raised by the solvers, evaluators and verifiers in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A Riemann state with non-positive (or non-finite) density.
    InvalidDensity { rho_minus: f64, rho_plus: f64 },
    /// A parameter outside its admissible range.
    InvalidParameter(&'static str),
    /// A coefficient evaluated to a negative value at `t`.
    NegativeCoefficient { name: &'static str, t: f64 },
    /// Adaptive quadrature did not reach the requested tolerance.
    NonIntegrable { value: f64, error: f64 },
    /// Quadrature of a pairing or residual failed.
    QuadratureFailure { value: f64, error: f64 },
    /// The operation requires `u_- > u_+`.
    NotDeltaCase,
    /// Vacuum velocity requested at a time where the fan has not opened.
    VacuumDivision { t: f64 },
    /// The viscous closed form needs `B(t) > 0`.
    DegenerateTime { t: f64 },
    /// The asymptotic series was requested outside its validity region.
    OutsideAsymptoticRegion { ratio: f64 },
    /// An iteration did not converge.
    NoConvergence { iterations: usize, residual: f64 },
    /// The grid does not resolve an interior layer.
    GridTooCoarse { layer_points: usize },
    /// Not enough profiles for extrapolation.
    InsufficientData { needed: usize, got: usize },
    /// The time step violates the explicit stability bound.
    StabilityViolation { dt: f64, limit: f64 },
    /// Far-field boundary values drifted beyond tolerance.
    BoundaryContamination { drift: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDensity { rho_minus, rho_plus } => write!(
                f,
                "densities must be positive (rho_minus = {rho_minus}, rho_plus = {rho_plus})"
            ),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::NegativeCoefficient { name, t } => {
                write!(f, "coefficient {name} is negative at t = {t}")
            }
            Error::NonIntegrable { value, error } => {
                write!(f, "quadrature did not converge (value {value}, error estimate {error})")
            }
            Error::QuadratureFailure { value, error } => {
                write!(f, "pairing quadrature failed (value {value}, error estimate {error})")
            }
            Error::NotDeltaCase => write!(f, "operation requires u_minus > u_plus"),
            Error::VacuumDivision { t } => {
                write!(f, "vacuum velocity undefined at t = {t}: fan width is zero")
            }
            Error::DegenerateTime { t } => {
                write!(f, "cumulative flux coefficient vanishes at t = {t}")
            }
            Error::OutsideAsymptoticRegion { ratio } => {
                write!(f, "asymptotic expansion invalid: distance/width ratio {ratio} <= 1")
            }
            Error::NoConvergence { iterations, residual } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:e})"
            ),
            Error::GridTooCoarse { layer_points } => {
                write!(f, "grid too coarse: interior layer spans only {layer_points} points")
            }
            Error::InsufficientData { needed, got } => {
                write!(f, "need at least {needed} profiles, got {got}")
            }
            Error::StabilityViolation { dt, limit } => {
                write!(f, "time step {dt:e} exceeds stability limit {limit:e}")
            }
            Error::BoundaryContamination { drift } => {
                write!(f, "far-field boundary drift {drift:e} exceeds tolerance")
            }
        }
    }
}

impl core::error::Error for Error {}
