use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state {value} lies outside the range covered by the source term")]
    OutOfRange { value: f64 },

    #[error("invalid piece layout: {0}")]
    InvalidPieces(String),

    #[error("unknown analytic function `{0}`")]
    UnknownAnalytic(String),

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("source term is not positive at s = {at} (value {value})")]
    NonPositive { at: f64, value: f64 },

    #[error("negative time horizon {0}")]
    NegativeTime(f64),

    #[error("index n_max = {n_max} needs log2-domain arithmetic, which is disabled")]
    LogDomainRequired { n_max: u32 },

    #[error("no initial value has blow-up time {eps}: the reciprocal integral diverges")]
    NoFiniteBlowup { eps: f64 },

    #[error("bisection failed to bracket blow-up time {eps}")]
    BracketFailed { eps: f64 },

    #[error("quadrature did not reach tolerance {tol} (estimate {estimate})")]
    QuadratureFailed { tol: f64, estimate: f64 },

    #[error("ODE integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initial data is not in L^p: r = {r} must be below 1/p = {}", 1.0 / .p)]
    NotInLp { r: f64, p: f64 },

    #[error("time step unstable at t = {time}: reduce dt below {suggested_dt:e}")]
    Unstable { time: f64, suggested_dt: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
