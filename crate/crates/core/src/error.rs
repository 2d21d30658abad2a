use crate::solvers::ConvergenceTrace;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operand shapes are incompatible or a dimension is zero/invalid.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A numerical precondition failed (non-finite input, non-SPD matrix,
    /// zero row where a unit row is required, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An invalid parameter or configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed file contents (CSV, PGM, JSON sidecar).
    #[error("format error: {0}")]
    Format(String),

    /// An iteration produced NaN/Inf. Carries the trace recorded up to the
    /// failing step so the run can still be inspected.
    #[error("divergence at iteration {at_iter}: non-finite iterate")]
    Divergence {
        at_iter: usize,
        trace: ConvergenceTrace,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
