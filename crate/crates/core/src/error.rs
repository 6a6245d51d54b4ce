use alloc::string::String;

use crate::fock::Parity;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("truncation not converged at dim {dim}: tail population {tail:.3e} exceeds {limit:.1e}")]
    NotConverged { dim: usize, tail: f64, limit: f64 },

    #[error("perturbative denominator vanishes for level {level}")]
    DegenerateDenominator { level: usize },

    #[error("classical Hamiltonian has no double well (mu + 1 = {0})")]
    NoDoubleWell(f64),

    #[error("operator does not commute with parity (residual {0:.3e})")]
    ParityViolation(f64),

    #[error("level ({parity:?}, rank {rank}) out of range: {available} levels available")]
    LabelOutOfRange {
        parity: Parity,
        rank: usize,
        available: usize,
    },

    #[error("integrator step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),

    #[error("gamma function pole at z = {re} + {im}i")]
    GammaPole { re: f64, im: f64 },

    #[error("parabolic cylinder evaluation lost {digits:.1} digits")]
    PrecisionLoss { digits: f64 },

    #[error("steady state is not unique (pivot ratio {0:.3e})")]
    DegenerateSteadyState(f64),

    #[error("horizon not relaxed: trace distance to steady state {0:.3e}")]
    UnrelaxedHorizon(f64),

    #[error("grid does not cover the state: boundary weight {0:.3e}")]
    GridTooSmall(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
