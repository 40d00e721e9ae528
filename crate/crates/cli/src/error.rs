use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Aborted(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Aborted(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}
