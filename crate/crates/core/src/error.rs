use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// A constellation violates the unit-power or rotational-symmetry assumptions.
    #[error("invalid constellation: {0}")]
    Constellation(String),

    /// A modulation basis is not unitary or has an unsupported order.
    #[error("invalid modulation basis: {0}")]
    Basis(String),

    /// A folded spectrum violates a Nyquist pulse constraint.
    #[error("invalid pulse spectrum at index {index}: {reason}")]
    Spectrum { index: usize, reason: String },

    /// A generic parameter is out of its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    /// Exhaustive enumeration would exceed the hard size guard.
    #[error("enumeration too large: {0} outcomes (limit 1e6)")]
    EnumerationTooLarge(f64),

    /// An iterative solver stopped before meeting its tolerance.
    #[error("solver did not converge after {iterations} iterations (primal {primal:.3e}, dual {dual:.3e})")]
    NotConverged {
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    /// The shaping solver ran out of iterations; carries the best feasible design.
    #[error(
        "pulse design did not converge after {} iterations (primal {:.3e}, dual {:.3e})",
        .0.report.iterations, .0.report.primal_residual, .0.report.dual_residual
    )]
    ShapingNotConverged(Box<crate::shaping::ShapingSolution>),

    /// Malformed text input (alphabet, matrix or spectrum files).
    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
