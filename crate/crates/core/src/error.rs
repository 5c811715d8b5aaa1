use thiserror::Error;

/// Errors surfaced by simulation, synthesis, and training routines.
///
/// Synthesis routines are total on their documented input domain: any input
/// outside it is rejected eagerly with one of these variants rather than
/// producing a schedule that silently violates its contract.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A vector or matrix had the wrong length for the declared dimensions.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Segment time stamps do not tile the window contiguously.
    #[error("schedule segments are not contiguous at segment {index}: expected t_start {expected}, got {got}")]
    NonContiguousSchedule {
        index: usize,
        expected: f64,
        got: f64,
    },

    /// A state component became NaN or infinite during integration.
    #[error("non-finite state encountered during {step}")]
    NonFiniteState { step: String },

    /// The requested control problem has no solution in this class
    /// (duplicate initial states, non-distinct targets, zero horizon, ...).
    #[error("infeasible control problem: {reason}")]
    InfeasibleProblem { reason: String },

    /// Synthesis would require a parameter or state magnitude beyond the
    /// configured cap; the plan is rejected instead of emitted.
    #[error("magnitude cap exceeded: |{value:.3e}| > {cap:.3e} ({context})")]
    MagnitudeCap {
        value: f64,
        cap: f64,
        context: String,
    },

    /// A verified schedule missed its accuracy contract.
    #[error("tolerance unmet: error {achieved:.3e} > tolerance {tolerance:.3e} ({context})")]
    ToleranceUnmet {
        achieved: f64,
        tolerance: f64,
        context: String,
    },

    /// A model or problem description is internally inconsistent.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// Serialization or file I/O failure while reading/writing artifacts.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
