//! Cumulative probability models for outcomes censored at detection limits.
//!
//! Values below or above a detection limit are treated as ordinal categories
//! in the semiparametric model `G[F(y | X)] = α(y) − βᵀX`, fitted by Newton
//! iterations on a likelihood whose intercept block is tridiagonal.

// negated float comparisons deliberately treat NaN as failure
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod anchors;
pub mod banded;
pub mod comparators;
pub mod data;
pub mod derived;
pub mod error;
pub mod inference;
pub mod likelihood;
pub mod link;
pub mod solver;

pub use anchors::{build_anchor_set, AlphaRef, AnchorSet, Assignment, Categories, TermKind};
pub use data::{validate_dataset, CensorCode, CensoredObservation, ValidatedDataset};
pub use derived::{
    conditional_cdf, conditional_cdf_curve, conditional_quantile, conditional_quantile_interval, ladder_at,
    probabilistic_index, CdfEstimate, ConditionalCdf, QuantileComponents, QuantileInterval, QuantileLadder,
    QuantileValue,
};
pub use error::{Error, Result};
pub use inference::{likelihood_ratio_test, score_test, score_test_binary, wald_interval, TestResult};
pub use likelihood::{log_likelihood, ParameterVector};
pub use link::Link;
pub use solver::{fit, FitOptions, ModelFit};

/// Validates observations, builds the category scaffold and fits in one call.
pub fn fit_observations(observations: &[CensoredObservation], link: Link, options: &FitOptions) -> Result<ModelFit> {
    let ds = validate_dataset(observations)?;
    let anchors = build_anchor_set(&ds)?;
    fit(&ds, &anchors, link, options)
}
