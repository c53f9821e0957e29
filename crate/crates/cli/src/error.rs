use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: String, source: streamflow::Error },
    #[error(transparent)]
    Sim(#[from] streamflow::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("calibration did not converge:\n{0}")]
    NoConvergence(String),
    #[error("refusing to overwrite {} (pass --force)", .0.display())]
    Exists(PathBuf),
    #[error("{0} GEMM validation case(s) failed")]
    ValidationFailed(usize),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Sim(e) => match e {
                streamflow::Error::Invariant(_) => 3,
                streamflow::Error::Parse { .. } | streamflow::Error::Config(_) | streamflow::Error::UnknownPreset(_) => 2,
                _ => 1,
            },
            CliError::ValidationFailed(_) => 3,
            CliError::NoConvergence(_) => 4,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Exists(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let parse = streamflow::Error::Parse { line: 3, msg: "x".into() };
        assert_eq!(CliError::Config { path: "a".into(), source: parse }.exit_code(), 2);
        assert_eq!(CliError::Sim(streamflow::Error::Invariant("x".into())).exit_code(), 3);
        assert_eq!(CliError::NoConvergence(String::new()).exit_code(), 4);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
    }
}
