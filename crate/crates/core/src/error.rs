use alloc::string::String;
use core::fmt;

use crate::mass::PhaseState;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside its documented domain.
    Parameter(String),
    /// Two partitions (or a partition and a system) have different ground sets.
    GroundSetMismatch { left: usize, right: usize },
    /// Particles `i` and `j` (0-based) coincide where the potential is singular.
    Singularity { i: usize, j: usize },
    /// The designated pair of the kinematical model never meets again.
    NoCollision { k: usize, reason: String },
    /// The collision policy kept proposing unusable states.
    PolicyRejected {
        k: usize,
        attempts: usize,
        reason: String,
    },
    /// A structural hypothesis of the kinematical model failed.
    ModelViolation(String),
    /// The integrator could not meet its tolerance at the minimal step.
    StepFailure { t: f64, h: f64, state: PhaseState },
    /// A monitored first integral drifted beyond the configured bound.
    ConservationViolation {
        quantity: &'static str,
        t: f64,
        drift: f64,
        limit: f64,
    },
    /// Too few events to evaluate a property.
    TraceTooShort { len: usize, min: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::GroundSetMismatch { left, right } => {
                write!(f, "ground sets differ: {left} vs {right} elements")
            }
            Error::Singularity { i, j } => {
                write!(f, "particles {} and {} coincide", i + 1, j + 1)
            }
            Error::NoCollision { k, reason } => {
                write!(f, "collision {k} has no future coincidence: {reason}")
            }
            Error::PolicyRejected {
                k,
                attempts,
                reason,
            } => write!(
                f,
                "collision policy rejected at collision {k} after {attempts} attempts: {reason}"
            ),
            Error::ModelViolation(msg) => write!(f, "model violation: {msg}"),
            Error::StepFailure { t, h, .. } => {
                write!(f, "step size {h:e} below minimum at t = {t}")
            }
            Error::ConservationViolation {
                quantity,
                t,
                drift,
                limit,
            } => write!(
                f,
                "{quantity} drift {drift:e} exceeds {limit:e} at t = {t}"
            ),
            Error::TraceTooShort { len, min } => {
                write!(f, "trace has {len} events, at least {min} required")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
