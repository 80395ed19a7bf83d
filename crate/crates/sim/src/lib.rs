//! Monte Carlo studies of cumulative probability models under detection
//! limits, with substitution and lognormal-likelihood comparators.

pub mod error;
pub mod estimator;
pub mod generate;
pub mod metrics;
pub mod scenario;
pub mod study;

pub use error::{Result, SimError};
pub use estimator::{evaluate, Draw, Estimator};
pub use generate::{generate, generate_misspec, generate_multi_dl, generate_single_dl, replicate_rng};
pub use metrics::{summarize, MetricsRow};
pub use scenario::{expected_censoring, targets, CensoringRate, Family, ScenarioSpec, Target, TargetKind};
pub use study::{run_study, run_study_with_threads, Exclusion, StudyReport};
