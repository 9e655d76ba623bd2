use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unbounded linear program")]
    Unbounded,

    #[error("simplex iteration limit of {limit} exceeded")]
    IterationLimit { limit: usize },

    #[error("model format error: {0}")]
    Format(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line tool for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension(_) | Error::InvalidArgument(_) => 2,
            Error::Io(_) | Error::Csv(_) => 3,
            Error::InvalidModel(_) | Error::Format(_) => 4,
            Error::Infeasible(_) | Error::Unbounded => 5,
            Error::IterationLimit { .. } => 6,
        }
    }
}
