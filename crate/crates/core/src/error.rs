use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A truncation (Fock dimension, loss order or syndrome count) left more
    /// than the tolerated weight behind even after the allowed extension.
    #[error("cutoff exhausted for {what}: deficit {deficit:.3e} at cutoff {cutoff}")]
    CutoffExhausted {
        what: &'static str,
        cutoff: usize,
        deficit: f64,
    },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("internal consistency fault: {0}")]
    Internal(String),

    #[error("unclassifiable syndrome ({n},{m}): residual phase {phase:.3e} rad")]
    Unclassifiable { n: u32, m: u32, phase: f64 },

    #[error("syndrome ({n},{m}) is a failure outcome")]
    FailureSyndrome { n: u32, m: u32 },

    #[error("target unreachable: {0}")]
    Unreachable(String),

    #[error("state outside codeword span: residual {0:.3e}")]
    SpanViolation(f64),

    #[error("state budget exceeded: {needed} amplitudes > {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
