use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between raw observations and derived quantities.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyData,
    #[error("observation {index} has {found} covariates, expected {expected}")]
    InconsistentDimensions {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset has no uncensored outcome values, so there are no anchor points")]
    NoUncensoredValues,
    #[error("non-finite value in observation {index}")]
    NonFiniteValue { index: usize },
    #[error("only one outcome category is present; the likelihood carries no information")]
    SingleCategory,
    #[error("internal assignment error for observation {index}: {reason}")]
    InternalAssignmentError { index: usize, reason: String },

    #[error("alpha parameters are not strictly increasing at position {position}")]
    NonIncreasingAlphas { position: usize },
    #[error("log-likelihood is not finite")]
    NonFiniteLikelihood,
    #[error("parameter vector has {found} entries, model expects {expected}")]
    ParameterDimension { expected: usize, found: usize },

    #[error("Newton iterations did not converge after {iterations} steps (gradient sup-norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
        loglik: f64,
    },
    #[error("information matrix is singular or not positive definite ({detail})")]
    SingularInformation { detail: String },
    #[error("step-halving exhausted without restoring alpha ordering and likelihood ascent at iteration {iteration}")]
    NonIncreasingAlphasUnrecoverable { iteration: usize },
    #[error("invalid fit options: {0}")]
    InvalidOptions(String),

    #[error("reduced model is not nested in the full model: {0}")]
    NotNested(String),
    #[error("models were not fitted to the same data: {0}")]
    MismatchedData(String),
    #[error("covariate must be coded 0/1, found {value} at observation {index}")]
    NonBinaryCovariate { index: usize, value: f64 },
    #[error("score test requires uncensored data and exactly one covariate")]
    ScoreTestDesign,

    #[error("probability must lie strictly between 0 and 1, got {0}")]
    InvalidProbability(f64),
    #[error("link `{0}` has no closed-form probabilistic index")]
    UnsupportedLink(String),
    #[error("covariate vector has length {found}, model expects {expected}")]
    CovariateLength { expected: usize, found: usize },
    #[error("index {index} out of range for {len} coefficients")]
    CoefficientIndex { index: usize, len: usize },

    #[error("outcome must be positive for the log transform, found {value} at observation {index}")]
    NonPositiveOutcome { index: usize, value: f64 },
    #[error("substitution requires a single lower detection limit: {0}")]
    MultipleDLsUnsupported(String),
}

impl Error {
    /// Stable machine-readable name used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyData => "EmptyData",
            Error::InconsistentDimensions { .. } => "InconsistentDimensions",
            Error::NoUncensoredValues => "NoUncensoredValues",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::SingleCategory => "SingleCategory",
            Error::InternalAssignmentError { .. } => "InternalAssignmentError",
            Error::NonIncreasingAlphas { .. } => "NonIncreasingAlphas",
            Error::NonFiniteLikelihood => "NonFiniteLikelihood",
            Error::ParameterDimension { .. } => "ParameterDimension",
            Error::NotConverged { .. } => "NotConverged",
            Error::SingularInformation { .. } => "SingularInformation",
            Error::NonIncreasingAlphasUnrecoverable { .. } => "NonIncreasingAlphasUnrecoverable",
            Error::InvalidOptions(_) => "InvalidOptions",
            Error::NotNested(_) => "NotNested",
            Error::MismatchedData(_) => "MismatchedData",
            Error::NonBinaryCovariate { .. } => "NonBinaryCovariate",
            Error::ScoreTestDesign => "ScoreTestDesign",
            Error::InvalidProbability(_) => "InvalidProbability",
            Error::UnsupportedLink(_) => "UnsupportedLink",
            Error::CovariateLength { .. } => "CovariateLength",
            Error::CoefficientIndex { .. } => "CoefficientIndex",
            Error::NonPositiveOutcome { .. } => "NonPositiveOutcome",
            Error::MultipleDLsUnsupported(_) => "MultipleDLsUnsupported",
        }
    }

    /// True for failures of the numerical procedure rather than of the inputs.
    pub fn is_computational(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::SingularInformation { .. }
                | Error::NonIncreasingAlphasUnrecoverable { .. }
                | Error::NonFiniteLikelihood
        )
    }
}
