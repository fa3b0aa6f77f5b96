use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration; `pointer` locates the offending field.
    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },
    /// Numerical or domain failure; the message starts with the module name.
    #[error("domain error in {0}")]
    Domain(#[from] qorder_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        let pointer = pointer.into();
        CliError::Config {
            pointer: if pointer.is_empty() { "/".into() } else { pointer },
            message: message.into(),
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for numerical or
    /// domain errors, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Lifts any core module error into [`CliError::Domain`].
pub(crate) fn domain<E: Into<qorder_core::Error>>(e: E) -> CliError {
    CliError::Domain(e.into())
}

pub type Result<T> = std::result::Result<T, CliError>;
