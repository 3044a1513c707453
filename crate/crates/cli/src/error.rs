use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Engine(#[from] ddqmc::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        use ddqmc::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Engine(E::InvalidParameter { .. } | E::InvalidLattice(_) | E::OracleTooLarge { .. }) => 2,
            CliError::Engine(E::PopulationDied { .. }) => 3,
            CliError::Engine(E::PopulationExplosion { .. } | E::TimeStepTooLarge { .. }) => 4,
            _ => 1,
        }
    }
}
