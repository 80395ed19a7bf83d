use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("unknown scenario {scenario} for family `{family}`")]
    UnknownScenario { family: String, scenario: u8 },
    #[error("unknown scenario family `{0}` (expected single, multi or misspec)")]
    UnknownFamily(String),
    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),
    #[error("invalid study specification: {0}")]
    InvalidSpec(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Core(#[from] cpm_core::Error),
}

impl SimError {
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::UnknownScenario { .. } => "UnknownScenario",
            SimError::UnknownFamily(_) => "UnknownFamily",
            SimError::UnknownEstimator(_) => "UnknownEstimator",
            SimError::InvalidSpec(_) => "InvalidSpec",
            SimError::ThreadPool(_) => "ThreadPool",
            SimError::Core(e) => e.kind(),
        }
    }
}
