//! Error types, one enum per subsystem.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("model parameters must be finite")]
    NonFinite,
    #[error("both surfaces must share one nuclear mass (got {m1} and {m2})")]
    UnequalMasses { m1: f64, m2: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error(
        "coherence parameters violate normalizability (Re a > 0, Re b > 0, 4 Re a Re b > (Re c)^2)"
    )]
    NonNormalizable,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("step size must be positive, got {dt}")]
    InvalidStep { dt: f64 },
    /// A step produced a state outside the normalizable set. The state is
    /// carried along so propagation can continue with the step flagged.
    #[error("integration step left the normalizable parameter set")]
    DegenerateState(Box<crate::gaussian::GaussianCoherence>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error(
        "domain too small for the initial state: boundary-to-peak ratio {ratio:.3e} exceeds {limit:.1e}"
    )]
    DomainTooSmall { ratio: f64, limit: f64 },
    #[error("grid axes need even point counts >= 64, got {nq} x {np}")]
    BadResolution { nq: usize, np: usize },
    #[error("grid bounds must be finite with min < max")]
    BadBounds,
    #[error(
        "propagation unstable at step {step} (t = {t:.3}): max |rho| = {max_abs:.3e} exceeds 1e3 x initial {initial:.3e}"
    )]
    Unstable {
        step: usize,
        t: f64,
        max_abs: f64,
        initial: f64,
    },
    #[error("the grid channel integrates only the exact and bare semiclassical equations")]
    UnsupportedMethod,
    #[error("step size must be positive, got {dt}")]
    InvalidStep { dt: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservablesError {
    #[error("correlation series requires uniform sampling (dt > 0)")]
    NonUniformSampling,
    #[error("correlation series is empty")]
    EmptySeries,
    #[error("peak floor must lie in (0, 1), got {floor}")]
    InvalidFloor { floor: f64 },
    #[error("need at least 3 peaks to estimate a spacing, got {count}")]
    TooFewPeaks { count: usize },
}

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("channel `{channel}` does not support method `{method}`")]
    UnsupportedMethod {
        channel: &'static str,
        method: crate::dynamics::Method,
    },
    #[error("channel `{channel}` requires a grid specification")]
    MissingGridSpec { channel: &'static str },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Observables(#[from] ObservablesError),
}
