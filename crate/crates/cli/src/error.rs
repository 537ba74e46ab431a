use thiserror::Error;

/// Failures mapped onto the process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Failed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error(transparent)]
    Numerics(#[from] starforms::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use starforms::Error as E;
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            // Rejections of the requested setup count as configuration
            // errors; anything else raised while computing is a failed run.
            CliError::Numerics(
                E::UnsupportedDimension(_)
                | E::InvalidParameter(_)
                | E::ChainInvariant(_)
                | E::VolumeRatioTooSmall(_)
                | E::StepTooLarge { .. }
                | E::MomentTableTooSmall { .. }
                | E::TopDegreeWithBoundary,
            ) => 2,
            CliError::Numerics(_) => 1,
        }
    }
}
