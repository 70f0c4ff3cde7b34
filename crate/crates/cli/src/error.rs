use std::fmt;

use fewbody_core::Error as CoreError;

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Unreadable or invalid input: missing files, bad JSON, bad parameters.
    Input,
    /// The model or the integrator failed while running.
    Runtime,
    /// A verification suite found a violated property.
    Verification,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Input => 2,
            ExitKind::Runtime => 3,
            ExitKind::Verification => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub source: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn input(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ExitKind::Input,
            source: e.into(),
        }
    }

    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ExitKind::Runtime,
            source: e.into(),
        }
    }

    /// Core errors raised while running: parameter and shape errors are the
    /// caller's fault, everything else is a model or integration failure.
    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::Parameter(_) | CoreError::GroundSetMismatch { .. } | CoreError::TraceTooShort { .. } => {
                CliError::input(e)
            }
            _ => CliError::runtime(e),
        }
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        CliError {
            kind: self.kind,
            source: self.source.context(msg),
        }
    }

    pub fn code(&self) -> i32 {
        self.kind.code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::from_core(e)
    }
}
