use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("non-finite state at t = {t} (step size too large?)")]
    NonFinite { t: f64 },

    #[error("{0}")]
    Problem(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_dim(expected: usize, got: usize, context: &'static str) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected,
                got,
                context,
            })
        }
    }
}
