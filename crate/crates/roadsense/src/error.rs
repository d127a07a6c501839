//! Error classification shared by the pipeline and the CLI exit codes.

use crate::config::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Input,
    Network,
    Analysis,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Input => 3,
            ErrorKind::Network => 4,
            ErrorKind::Analysis => 5,
        }
    }
}

/// A failure attributed to one pipeline stage.
#[derive(Debug, thiserror::Error)]
#[error("{stage} failed")]
pub struct StageError {
    pub stage: &'static str,
    pub kind: ErrorKind,
    #[source]
    pub source: anyhow::Error,
}

impl StageError {
    pub fn new(stage: &'static str, kind: ErrorKind, source: impl Into<anyhow::Error>) -> Self {
        Self {
            stage,
            kind,
            source: source.into(),
        }
    }
}

/// Attaches a stage and error kind to fallible results.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str, kind: ErrorKind) -> Result<T, StageError>;
}

impl<T, E: Into<anyhow::Error>> StageContext<T> for Result<T, E> {
    fn stage(self, stage: &'static str, kind: ErrorKind) -> Result<T, StageError> {
        self.map_err(|e| StageError::new(stage, kind, e))
    }
}

/// Process exit code for an error: the first stage or config error in the
/// chain decides, anything else is 1.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(s) = cause.downcast_ref::<StageError>() {
            return s.kind.exit_code();
        }
        if cause.downcast_ref::<ConfigError>().is_some() {
            return ErrorKind::Config.exit_code();
        }
    }
    1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        let e: anyhow::Error = StageError::new("fetch", ErrorKind::Network, anyhow::anyhow!("down")).into();
        assert_eq!(exit_code(&e), 4);
        assert_eq!(format!("{e:#}"), "fetch failed: down");
        let e: anyhow::Error = ConfigError::Missing { key: "city" }.into();
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 1);
    }
}
