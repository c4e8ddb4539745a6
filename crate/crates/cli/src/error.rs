use thiserror::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("serial and parallel estimates disagree: {0}")]
    BenchMismatch(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
            CliError::BenchMismatch(_) => 5,
        }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> CliError {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<tissuemix::Error> for CliError {
    fn from(e: tissuemix::Error) -> Self {
        use tissuemix::Error as E;
        match e {
            // malformed input files
            E::Parse { .. } | E::Graph(_) | E::Reference(_) => CliError::Io(e.to_string()),
            E::EmptyInput(_) | E::Shape(_) => CliError::Usage(e.to_string()),
            E::Parameter(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}
