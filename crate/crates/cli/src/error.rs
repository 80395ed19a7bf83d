use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: u64, column: String, message: String },
    #[error("line {line}: unknown censor code `{code}` (expected L/lower, empty/none, U/upper)")]
    UnknownCensorCode { line: u64, code: String },
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("profile names unknown covariate `{0}`")]
    UnknownProfileColumn(String),
    #[error("malformed profile `{0}` (expected name=value or name=start:stop:step, comma separated)")]
    InvalidProfile(String),
    #[error("{0}")]
    Usage(String),
    #[error("fit document: {0}")]
    Document(String),
    #[error(transparent)]
    Core(#[from] cpm_core::Error),
    #[error(transparent)]
    Sim(#[from] cpm_sim::SimError),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "Io",
            CliError::Parse { .. } => "ParseError",
            CliError::UnknownCensorCode { .. } => "UnknownCensorCode",
            CliError::MissingColumn(_) => "MissingColumn",
            CliError::Config(_) => "ConfigError",
            CliError::UnknownProfileColumn(_) => "UnknownProfileColumn",
            CliError::InvalidProfile(_) => "InvalidProfile",
            CliError::Usage(_) => "UsageError",
            CliError::Document(_) => "DocumentError",
            CliError::Core(e) => e.kind(),
            CliError::Sim(e) => e.kind(),
        }
    }

    /// 2 for problems with the request itself, 1 for everything that went
    /// wrong while reading data or computing.
    pub fn exit_code(&self) -> i32 {
        use cpm_core::Error as E;
        use cpm_sim::SimError as S;
        match self {
            CliError::Config(_)
            | CliError::UnknownProfileColumn(_)
            | CliError::InvalidProfile(_)
            | CliError::Usage(_)
            | CliError::MissingColumn(_) => 2,
            CliError::Core(E::InvalidProbability(_) | E::CovariateLength { .. } | E::UnsupportedLink(_)) => 2,
            CliError::Core(E::InvalidOptions(_)) => 2,
            CliError::Sim(
                S::UnknownScenario { .. } | S::UnknownFamily(_) | S::UnknownEstimator(_) | S::InvalidSpec(_),
            ) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Inner<'a> {
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Outer<'a> {
            error: Inner<'a>,
        }
        serde_json::to_string(&Outer {
            error: Inner {
                kind: self.kind(),
                message: self.to_string(),
            },
        })
        .expect("error object serializes")
    }
}
