use openmem_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure in {context}: {source}")]
    Numerical {
        context: &'static str,
        #[source]
        source: CoreError,
    },
    #[error("acceptance threshold violated: {0}")]
    Threshold(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Threshold(_) => 4,
        }
    }

    /// Parameter problems surfacing from the core are config errors; the rest
    /// are numerical.
    pub fn from_core(context: &'static str, source: CoreError) -> Self {
        match source {
            CoreError::InvalidParameter(_)
            | CoreError::NyquistViolation { .. }
            | CoreError::BelowRealAxis { .. }
            | CoreError::UnknownModel(_)
            | CoreError::NotHermitian { .. }
            | CoreError::InvalidDensity { .. } => CliError::Config(format!("{context}: {source}")),
            _ => CliError::Numerical { context, source },
        }
    }
}
