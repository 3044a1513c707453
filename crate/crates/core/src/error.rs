use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("malformed probability vector: {0}")]
    MalformedProbabilities(String),

    #[error("negative value {0} passed to stochastic rounding")]
    NegativeMagnitude(f64),

    #[error("diagonal population vanished at step {step}: simulation died")]
    PopulationDied { step: u64 },

    #[error("total walker weight {weight} exceeded hard cap {cap} at step {step}")]
    PopulationExplosion { step: u64, weight: u64, cap: u64 },

    #[error("time step too large: death factor 1 + Re(D) = {factor} < 0 at step {step}")]
    TimeStepTooLarge { step: u64, factor: f64 },

    #[error("system too large for dense oracle: {sites} sites (max {max})")]
    OracleTooLarge { sites: usize, max: usize },

    #[error("steady state is not unique (relative pivot {0:e})")]
    DegenerateSteadyState(f64),

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("integration unstable after {step} steps (norm {norm:e})")]
    Unstable { step: usize, norm: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("run did not converge: {0}")]
    NotConverged(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
