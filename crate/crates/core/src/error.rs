use thiserror::Error;

/// Errors raised across the crate.
///
/// Each variant maps onto one CLI exit code (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("load error: {0}")]
    Load(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Process exit code: 2 usage, 3 data validation, 4 numeric failure,
    /// 5 non-convergence (strict mode only).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Refused(_) | Error::Json(_) => 2,
            Error::Validation(_) | Error::Load(_) | Error::Csv(_) | Error::Io(_) => 3,
            Error::Numeric(_) | Error::Initialization(_) => 4,
            Error::NotConverged(_) => 5,
        }
    }
}
