//! Estimators compared in the studies and the scoring of one replicate's
//! estimates against the true target values.

use std::fmt;
use std::str::FromStr;

use cpm_core::comparators::{censored_lognormal_mle, substitute_and_fit, ImputationRule, ParametricFit};
use cpm_core::inference::normal_critical_value;
use cpm_core::{
    build_anchor_set, conditional_cdf, conditional_quantile_interval, fit, wald_interval, FitOptions, Link, ModelFit,
    QuantileValue, ValidatedDataset,
};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::scenario::{Target, TargetKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Cpm,
    ImputeDl,
    ImputeHalf,
    ImputeSqrt2,
    Mle,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Estimator::Cpm,
        Estimator::ImputeDl,
        Estimator::ImputeHalf,
        Estimator::ImputeSqrt2,
        Estimator::Mle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Cpm => "cpm",
            Estimator::ImputeDl => "impute_dl",
            Estimator::ImputeHalf => "impute_half",
            Estimator::ImputeSqrt2 => "impute_sqrt2",
            Estimator::Mle => "mle",
        }
    }

    /// Parses a comma-separated list such as `cpm,impute_half,mle`.
    pub fn parse_list(s: &str) -> Result<Vec<Estimator>> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| SimError::UnknownEstimator(s.to_string()))
    }
}

/// One replicate's estimate of one target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    /// Numeric value entering bias and RMSE.
    pub score: f64,
    pub covered: bool,
    /// A categorical or structurally fixed estimate scored at a detection
    /// limit or a bound rather than at a genuine numeric estimate.
    pub flagged: bool,
}

/// Numeric score and flag for a quantile that may be a tail category:
/// a below-limit estimate with truth below the limit scores the truth itself
/// (zero error); with truth inside the limits it scores the limit and is
/// flagged. Likewise above.
pub fn score_quantile(q: &QuantileValue, truth: f64, lower: Option<f64>, upper: Option<f64>) -> (f64, bool) {
    match q {
        QuantileValue::Numeric { value } => (*value, false),
        QuantileValue::BelowLowest { .. } => {
            let l = lower.unwrap_or(f64::NEG_INFINITY);
            if truth < l {
                (truth, false)
            } else {
                (l, true)
            }
        }
        QuantileValue::AboveHighest { .. } => {
            let u = upper.unwrap_or(f64::INFINITY);
            if truth > u {
                (truth, false)
            } else {
                (u, true)
            }
        }
    }
}

/// Whether `[lo, hi]` covers `truth`. A below-limit endpoint stands for the
/// whole region under `l`: as an upper end it covers only `truth < l`, as a
/// lower end it is unbounded. Symmetrically for above-limit endpoints.
pub fn quantile_interval_covers(
    lo: &QuantileValue,
    hi: &QuantileValue,
    truth: f64,
    lower: Option<f64>,
    upper: Option<f64>,
) -> bool {
    let l = lower.unwrap_or(f64::NEG_INFINITY);
    let u = upper.unwrap_or(f64::INFINITY);
    let lo_ok = match lo {
        QuantileValue::BelowLowest { .. } => true,
        QuantileValue::Numeric { value } => *value <= truth,
        QuantileValue::AboveHighest { .. } => truth > u,
    };
    let hi_ok = match hi {
        QuantileValue::BelowLowest { .. } => truth < l,
        QuantileValue::Numeric { value } => truth <= *value,
        QuantileValue::AboveHighest { .. } => true,
    };
    lo_ok && hi_ok
}

fn cpm_draws(data: &ValidatedDataset, link: Link, targets: &[Target], level: f64) -> Result<Vec<Option<Draw>>> {
    let anchors = build_anchor_set(data)?;
    let f: ModelFit = fit(data, &anchors, link, &FitOptions::default())?;
    let (lower, upper) = (f.categories.lower_dl, f.categories.upper_dl);
    targets
        .iter()
        .map(|t| {
            Ok(match t.kind {
                // β is only on the generating scale under the probit link
                TargetKind::Beta if link != Link::Probit => None,
                TargetKind::Beta => {
                    let (lo, hi) = wald_interval(&f, 0, level)?;
                    Some(Draw {
                        score: f.betas()[0],
                        covered: lo <= t.truth && t.truth <= hi,
                        flagged: false,
                    })
                }
                TargetKind::Quantile { p, x } => {
                    let q = conditional_quantile_interval(&f, &[x], p, level)?;
                    let (score, flagged) = score_quantile(&q.estimate, t.truth, lower, upper);
                    Some(Draw {
                        score,
                        covered: quantile_interval_covers(&q.lo, &q.hi, t.truth, lower, upper),
                        flagged,
                    })
                }
                TargetKind::Cdf { y, x } => {
                    let c = conditional_cdf(&f, &[x], y)?;
                    let (lo, hi) = c.interval(link, level)?;
                    Some(Draw {
                        score: c.estimate,
                        covered: lo <= t.truth && t.truth <= hi,
                        flagged: c.link_scale.is_none() && t.truth > 0.0 && t.truth < 1.0,
                    })
                }
            })
        })
        .collect()
}

fn parametric_draws(f: &ParametricFit, targets: &[Target], level: f64) -> Result<Vec<Option<Draw>>> {
    let z = normal_critical_value(level)?;
    targets
        .iter()
        .map(|t| {
            let (score, lo, hi) = match t.kind {
                TargetKind::Beta => {
                    let se = f.beta_std_errors()[0];
                    (f.beta[0], f.beta[0] - z * se, f.beta[0] + z * se)
                }
                TargetKind::Quantile { p, x } => f.quantile(&[x], p, level)?,
                TargetKind::Cdf { y, x } => f.cdf(&[x], y, level)?,
            };
            Ok(Some(Draw {
                score,
                covered: lo <= t.truth && t.truth <= hi,
                flagged: false,
            }))
        })
        .collect()
}

/// Fits `estimator` to `data` and scores every target; `None` marks a target
/// the estimator does not address.
pub fn evaluate(
    estimator: Estimator,
    data: &ValidatedDataset,
    link: Link,
    targets: &[Target],
    level: f64,
) -> Result<Vec<Option<Draw>>> {
    match estimator {
        Estimator::Cpm => cpm_draws(data, link, targets, level),
        Estimator::ImputeDl => parametric_draws(&substitute_and_fit(data, ImputationRule::Dl)?, targets, level),
        Estimator::ImputeHalf => parametric_draws(&substitute_and_fit(data, ImputationRule::HalfDl)?, targets, level),
        Estimator::ImputeSqrt2 => {
            parametric_draws(&substitute_and_fit(data, ImputationRule::DlOverSqrt2)?, targets, level)
        }
        Estimator::Mle => parametric_draws(&censored_lognormal_mle(data)?, targets, level),
    }
}
