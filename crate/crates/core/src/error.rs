use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Two perturbed values coincide under discrete noise (1-based labels).
    #[error("tie between candidates {0} and {1} under discrete noise")]
    Tie(usize, usize),
    #[error("no sign change of {what} on [{lo}, {hi}]")]
    Bracket { what: String, lo: f64, hi: f64 },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidArgument(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Self::Unsupported(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Self::Parse(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Self::Bracket { .. } | Self::NotFound(_) | Self::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
