use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state is not normalized: |norm - 1| = {deviation:e}")]
    NotNormalized { deviation: f64 },
    #[error("factor {which} is not unitary (residual {residual:e})")]
    NotUnitary { which: &'static str, residual: f64 },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("time grid must be strictly increasing and non-empty")]
    BadTimeGrid,
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("series too short: {len} samples, need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("series is not uniformly sampled")]
    NonUniformSampling,
    #[error("correlation undefined: zero variance input")]
    ZeroVariance,
    #[error("arg det C is invalid at every sample")]
    Indeterminate,
    #[error("{} detuning node(s) failed, first: node {}", failures.len(), failures[0].0)]
    NodeFailures { failures: Vec<(usize, Error)> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
