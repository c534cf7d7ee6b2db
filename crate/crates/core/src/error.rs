use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("nonpositive shape parameter: {0}")]
    NonpositiveShape(String),

    #[error("diverged rollout at step {step}")]
    DivergedRollout { step: usize },

    #[error("invalid information matrix: minimum eigenvalue {min_eigenvalue:e}")]
    InvalidInformationMatrix { min_eigenvalue: f64 },

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("planning failed: every candidate rollout diverged")]
    PlanningFailed,

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("zero reference value at index {0}")]
    ZeroReference(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("experiment {k}: {source}")]
    Experiment {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    /// Stable machine-readable identifier used by the CLI error JSON and the C API.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonpositiveShape(_) => "nonpositive_shape_parameter",
            Error::DivergedRollout { .. } => "diverged_rollout",
            Error::InvalidInformationMatrix { .. } => "invalid_information_matrix",
            Error::InvalidCovariance(_) => "invalid_covariance",
            Error::PlanningFailed => "planning_failed",
            Error::UnknownScenario(_) => "unknown_scenario",
            Error::ZeroReference(_) => "zero_reference",
            Error::Dimension(_) => "dimension_mismatch",
            Error::Config(_) => "invalid_config",
            Error::Experiment { source, .. } => source.kind(),
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::TomlDe(_) | Error::TomlSer(_) => "toml",
        }
    }
}
