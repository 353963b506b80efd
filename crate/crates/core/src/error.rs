use thiserror::Error;

/// Errors raised by the simulation layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite detuning {0}")]
    NonFiniteDetuning(f64),

    /// Zero denominator or singular linear system, e.g. all rates zero.
    #[error("degenerate cavity parameters: {0}")]
    Degenerate(String),

    #[error("phase undefined: amplitude {amplitude:e} at detuning {omega}")]
    UndefinedPhase { omega: f64, amplitude: f64 },

    #[error("frequency grid does not cover the packet: {0}")]
    Coverage(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("integrator failure at t = {t:e} (step {step:e}): {reason}")]
    Integrator { t: f64, step: f64, reason: String },

    #[error("slope not asymptotic: refinements {coarse} and {fine} differ by more than 20%")]
    NonAsymptotic { coarse: f64, fine: f64 },

    #[error("success probability {0:e} too small to herald")]
    NoSignal(f64),

    #[error("unsupported blocked-cavity set {0:?}")]
    UnsupportedBlockedSet(Vec<usize>),

    #[error("operation requires {expected} qubits, got {got}")]
    QubitCount { expected: usize, got: usize },

    #[error("internal solver failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
