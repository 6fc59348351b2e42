use thiserror::Error;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("truncation {requested} exceeds the {available} available states")]
    TruncationTooLarge { requested: usize, available: usize },

    #[error("no exponential growth window found")]
    NoGrowthWindow,

    #[error("initial state is not spanned by the eigenbasis (projection loss {loss:.3e})")]
    BasisIncomplete { loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Non-fatal diagnostics attached to results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The highest returned level lies above the potential at a wall, so the
    /// box and not the well shapes it.
    Resolution { level: usize, energy: f64, wall_potential: f64 },
    /// The top of the truncated basis carries a non-negligible share of the
    /// correlator (or of the Boltzmann weight).
    TruncationTooSmall { fraction: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::Resolution { level, energy, wall_potential } => write!(
                f,
                "level {level} (E = {energy:.6}) exceeds the wall potential {wall_potential:.6}"
            ),
            Warning::TruncationTooSmall { fraction } => write!(
                f,
                "top of the truncated basis carries {:.3}% of the result",
                fraction * 100.0
            ),
        }
    }
}
