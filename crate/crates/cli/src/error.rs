use std::path::PathBuf;

/// Failure of a command, carrying its exit code class.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 1 numeric, 2 configuration (including unusable output paths),
    /// 3 failed assertion.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Assertion(_) => 3,
        }
    }
}

impl From<frechet_core::Error> for CliError {
    fn from(e: frechet_core::Error) -> Self {
        use frechet_core::Error as E;
        match e {
            E::Numeric(_) | E::NonFinite(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
