use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] fxdiff::Error),
    #[error("not guaranteed: L exceeds Lbar (L = {l}, Lbar = {lbar})")]
    NotGuaranteed { l: f64, lbar: f64 },
    #[error("all runs diverged: {0}")]
    AllDiverged(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 2 usage, 3 numerical failure, 4 infeasible request.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(e) if e.is_infeasible() => 4,
            CliError::Core(fxdiff::Error::NotAdmissible(_) | fxdiff::Error::BoundNotApplicable { .. }) => 4,
            CliError::Core(fxdiff::Error::SetValued) => 3,
            CliError::Core(_) => 2,
            CliError::NotGuaranteed { .. } => 4,
            CliError::AllDiverged(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}
