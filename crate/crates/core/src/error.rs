use thiserror::Error;

use crate::layout::Slot;

/// Every failure the library can report.
///
/// Variants fall into three classes, which the CLI maps onto exit codes:
/// configuration problems, violated physics assumptions (poles, regime,
/// truncation leakage, off-resonance) and plain numerical/layout misuse.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: subsystem dimensions must be at least 2")]
    InvalidDimension { dim: usize },

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("operator is not Hermitian: max |A - A^dagger| = {deviation:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model assumption violated: {0}")]
    ModelAssumption(String),

    #[error(
        "small-rotation pole at photon number n = {n}: |nu - lambda*sqrt(n+1)| = {distance:e} \
         is within the guard {guard:e}"
    )]
    Pole { n: usize, distance: f64, guard: f64 },

    #[error("dispersive regime check failed: {0}")]
    RegimeInvalid(String),

    #[error(
        "truncation leakage {leakage:e} on the {slot} exceeds threshold {threshold:e}; \
         use {slot} dimension >= {required_dim}"
    )]
    Truncation {
        slot: Slot,
        leakage: f64,
        threshold: f64,
        required_dim: usize,
    },

    #[error("index {index} out of range for {slot} dimension {dim}")]
    OutOfRange {
        slot: Slot,
        index: usize,
        dim: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures caused by the physics premises rather than the input
    /// format: poles, invalid regime, leakage and the resonance condition.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::Pole { .. }
                | Error::RegimeInvalid(_)
                | Error::Truncation { .. }
                | Error::ModelAssumption(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
