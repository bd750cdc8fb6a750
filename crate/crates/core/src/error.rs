use thiserror::Error;

/// Errors raised by the library. `exit_code` maps them onto the CLI contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown field id: {0}")]
    Catalog(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("branch error: {0}")]
    Branch(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("condition violated: {0}")]
    Condition(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Convergence(_) | Error::Resolution(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
