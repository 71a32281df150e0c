use thiserror::Error;

/// Errors produced by the integrators and supporting machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{method}: non-finite state detected at stage {stage}")]
    Overflow { method: &'static str, stage: usize },

    #[error("stage count {required} exceeds cap {cap}; consider an implicit method or check the spectral radius estimate")]
    StageCapExceeded { required: usize, cap: usize },

    #[error("requested degree {requested} exceeds the maximum ladder degree {max}; use a smaller step size")]
    DegreeOutOfRange { requested: usize, max: usize },

    #[error("step size {tau:e} fell below the minimum {tau_min:e} at t = {t}")]
    StepUnderflow { tau: f64, tau_min: f64, t: f64 },

    #[error("adaptive control is not supported for {method}; it has no embedded error estimator")]
    AdaptiveUnsupported { method: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate triangle {index} (zero or negative area)")]
    DegenerateTriangle { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient asset: {0}")]
    Asset(String),
}

pub type Result<T> = std::result::Result<T, Error>;
