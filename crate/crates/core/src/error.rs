use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("time {t} outside the schedule domain [0, {t_f}]")]
    TimeOutOfRange { t: f64, t_f: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("integration failure at t = {t}: minimum eigenvalue {min_eigenvalue:.3e}")]
    IntegrationFailure { t: f64, min_eigenvalue: f64 },

    #[error("degenerate measurement outcome (normalization {norm:e})")]
    DegenerateOutcome { norm: f64 },
}

impl Error {
    /// Numerical-invariant failures, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationFailure { .. } | Error::DegenerateOutcome { .. } | Error::InvalidState(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
