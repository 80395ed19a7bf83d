//! Conditional CDFs, interpolated conditional quantiles and the
//! probabilistic index, all evaluated from a fitted model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::normal_critical_value;
use crate::link::Link;
use crate::solver::ModelFit;

/// `F̂(y | x)` with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfEstimate {
    pub estimate: f64,
    pub se: f64,
    /// Link-scale predictor `α̂_c − β̂ᵀx` and its standard error; `None` when
    /// the estimate is exactly 0 or 1 by construction.
    pub link_scale: Option<(f64, f64)>,
}

impl CdfEstimate {
    fn fixed(value: f64) -> Self {
        Self {
            estimate: value,
            se: 0.0,
            link_scale: None,
        }
    }

    /// Link-scale Wald interval mapped through the CDF.
    pub fn interval(&self, link: Link, level: f64) -> Result<(f64, f64)> {
        let z = normal_critical_value(level)?;
        Ok(match self.link_scale {
            Some((lp, se)) => (link.cdf(lp - z * se), link.cdf(lp + z * se)),
            None => (self.estimate, self.estimate),
        })
    }
}

fn check_covariates(fit: &ModelFit, x: &[f64]) -> Result<()> {
    if x.len() != fit.n_betas() {
        return Err(Error::CovariateLength {
            expected: fit.n_betas(),
            found: x.len(),
        });
    }
    Ok(())
}

/// Estimate for category `c`, i.e. `F̂(category c | x)`.
fn category_cdf(fit: &ModelFit, x: &[f64], c: usize) -> CdfEstimate {
    let m = fit.n_alphas();
    if c >= m {
        return CdfEstimate::fixed(1.0);
    }
    let lp = fit.theta_hat.linear_predictor(x);
    let lp = fit.alphas()[c] - lp;
    let mut g = vec![0.0; m + x.len()];
    g[c] = 1.0;
    for (gj, xj) in g[m..].iter_mut().zip(x) {
        *gj = -xj;
    }
    let se_lp = fit.quadratic_form(&g).max(0.0).sqrt();
    CdfEstimate {
        estimate: fit.link.cdf(lp),
        se: fit.link.pdf(lp) * se_lp,
        link_scale: Some((lp, se_lp)),
    }
}

/// `F̂(y | x)` as a step function over the outcome categories. Below every
/// category the estimate is 0; at or above the upper limit it stays at the
/// mass of the categories below that limit.
pub fn conditional_cdf(fit: &ModelFit, x: &[f64], y: f64) -> Result<CdfEstimate> {
    fit.require_converged()?;
    check_covariates(fit, x)?;
    Ok(match fit.categories.category_at_or_below(y) {
        None => CdfEstimate::fixed(0.0),
        Some(c) => category_cdf(fit, x, c),
    })
}

/// `F̂` at every category with pointwise intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCdf {
    pub x: Vec<f64>,
    /// Category positions; tail categories at their detection limits.
    pub eval_points: Vec<f64>,
    pub labels: Vec<String>,
    pub p: Vec<f64>,
    pub se: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
}

pub fn conditional_cdf_curve(fit: &ModelFit, x: &[f64], level: f64) -> Result<ConditionalCdf> {
    fit.require_converged()?;
    check_covariates(fit, x)?;
    let cats = &fit.categories;
    let k = cats.n_categories();
    let mut out = ConditionalCdf {
        x: x.to_vec(),
        eval_points: Vec::with_capacity(k),
        labels: Vec::with_capacity(k),
        p: Vec::with_capacity(k),
        se: Vec::with_capacity(k),
        ci_lo: Vec::with_capacity(k),
        ci_hi: Vec::with_capacity(k),
    };
    for c in 0..k {
        let e = category_cdf(fit, x, c);
        let (lo, hi) = e.interval(fit.link, level)?;
        out.eval_points.push(cats.category_value(c));
        out.labels.push(cats.category_label(c));
        out.p.push(e.estimate);
        out.se.push(e.se);
        out.ci_lo.push(lo.clamp(0.0, 1.0));
        out.ci_hi.push(hi.clamp(0.0, 1.0));
    }
    Ok(out)
}

/// A conditional quantile: a number, or a tail category when the requested
/// probability falls in the censored mass. Ordered
/// `BelowLowest < Numeric < AboveHighest`.
#[derive(Debug, Clone, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuantileValue {
    #[serde(rename = "below_dl")]
    BelowLowest {
        label: String,
    },
    Numeric {
        value: f64,
    },
    #[serde(rename = "above_dl")]
    AboveHighest {
        label: String,
    },
}

impl QuantileValue {
    pub fn numeric(&self) -> Option<f64> {
        match self {
            Self::Numeric { value } => Some(*value),
            _ => None,
        }
    }

    pub fn is_boundary(&self) -> bool {
        !matches!(self, Self::Numeric { .. })
    }
}

impl std::fmt::Display for QuantileValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Numeric { value } => write!(f, "{value}"),
            Self::BelowLowest { label } | Self::AboveHighest { label } => f.write_str(label),
        }
    }
}

/// The ladder `a₀, a₁..a_J, a_{J+1}` with absent tail categories replaced by
/// zero-mass copies of `a₁` and `a_J`.
#[derive(Debug, Clone)]
pub struct QuantileLadder {
    pub values: Vec<f64>,
    pub lower: Option<String>,
    pub upper: Option<String>,
}

impl QuantileLadder {
    pub fn from_fit(fit: &ModelFit) -> Self {
        let c = &fit.categories;
        let mut values = Vec::with_capacity(c.n_values() + 2);
        values.push(c.lower_dl.filter(|_| c.has_lower_cat).unwrap_or(c.values[0]));
        values.extend_from_slice(&c.values);
        values.push(
            c.upper_dl
                .filter(|_| c.has_upper_cat)
                .unwrap_or(*c.values.last().expect("at least one value")),
        );
        Self {
            values,
            lower: c.has_lower_cat.then(|| c.lower_label.clone().unwrap_or_default()),
            upper: c.has_upper_cat.then(|| c.upper_label.clone().unwrap_or_default()),
        }
    }

    /// Maps a per-category CDF (length `K`, last entry 1) onto the ladder.
    pub fn ladder_probabilities(&self, category_p: &[f64]) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.values.len());
        if self.lower.is_none() {
            p.push(0.0);
        }
        p.extend_from_slice(category_p);
        if self.upper.is_none() {
            p.push(1.0);
        }
        debug_assert_eq!(p.len(), self.values.len());
        p
    }

    /// `Q̂(p) = (1 − w) Q̂₁(p) + w Q̂₂(p)` on ladder probabilities `big_p`.
    pub fn quantile(&self, big_p: &[f64], p: f64) -> QuantileValue {
        let n = self.values.len();
        let last = n - 2;
        let (p0, pj) = (big_p[0], big_p[last]);
        if p <= p0 {
            if let Some(label) = &self.lower {
                return QuantileValue::BelowLowest { label: label.clone() };
            }
        }
        if p >= pj {
            if let Some(label) = &self.upper {
                return QuantileValue::AboveHighest { label: label.clone() };
            }
        }
        let c = self.components(big_p, p);
        QuantileValue::Numeric {
            value: (1.0 - c.w) * c.q1 + c.w * c.q2,
        }
    }

    /// The interpolation pieces at `p`, ignoring the boundary categories.
    pub fn components(&self, big_p: &[f64], p: f64) -> QuantileComponents {
        let n = self.values.len();
        let last = n - 2;
        let (p0, pj) = (big_p[0], big_p[last]);
        // P_{j-1} < p <= P_j, with P_{-1} = 0
        let j = big_p.partition_point(|v| *v < p).clamp(1, last);
        let a = &self.values;
        let lo = big_p[j - 1];
        let frac = if big_p[j] > lo {
            ((p - lo) / (big_p[j] - lo)).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let w = if pj > p0 {
            ((p - p0) / (pj - p0)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        QuantileComponents {
            j,
            q1: a[j - 1] + frac * (a[j] - a[j - 1]),
            q2: a[j] + frac * (a[j + 1] - a[j]),
            w,
        }
    }
}

/// `Q̂₁`, `Q̂₂` and the weight `w` at one probability; `j` is the ladder
/// index with `P_{j−1} < p ≤ P_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileComponents {
    pub j: usize,
    pub q1: f64,
    pub q2: f64,
    pub w: f64,
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// The quantile ladder at `x` with its probabilities `P₀..P_{J+1}`.
pub fn ladder_at(fit: &ModelFit, x: &[f64]) -> Result<(QuantileLadder, Vec<f64>)> {
    fit.require_converged()?;
    check_covariates(fit, x)?;
    let ladder = QuantileLadder::from_fit(fit);
    let cat: Vec<f64> = (0..fit.categories.n_categories())
        .map(|c| category_cdf(fit, x, c).estimate)
        .collect();
    let big_p = ladder.ladder_probabilities(&cat);
    Ok((ladder, big_p))
}

/// Weighted-interpolation estimate of the `p`-th conditional quantile.
pub fn conditional_quantile(fit: &ModelFit, x: &[f64], p: f64) -> Result<QuantileValue> {
    check_probability(p)?;
    let (ladder, big_p) = ladder_at(fit, x)?;
    Ok(ladder.quantile(&big_p, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileInterval {
    pub estimate: QuantileValue,
    pub lo: QuantileValue,
    pub hi: QuantileValue,
}

/// Quantile with an interval obtained by applying the same interpolation to
/// the CDF's upper band (giving `lo`) and lower band (giving `hi`). Bands are
/// made monotone before inversion so that `lo ≤ estimate ≤ hi`.
pub fn conditional_quantile_interval(fit: &ModelFit, x: &[f64], p: f64, level: f64) -> Result<QuantileInterval> {
    check_probability(p)?;
    let curve = conditional_cdf_curve(fit, x, level)?;
    let ladder = QuantileLadder::from_fit(fit);
    let mut upper = curve.ci_hi.clone();
    for k in 1..upper.len() {
        upper[k] = upper[k].max(upper[k - 1]);
    }
    let mut lower = curve.ci_lo.clone();
    for k in (0..lower.len().saturating_sub(1)).rev() {
        lower[k] = lower[k].min(lower[k + 1]);
    }
    Ok(QuantileInterval {
        estimate: ladder.quantile(&ladder.ladder_probabilities(&curve.p), p),
        lo: ladder.quantile(&ladder.ladder_probabilities(&upper), p),
        hi: ladder.quantile(&ladder.ladder_probabilities(&lower), p),
    })
}

/// `P(Y₁ < Y₂ | x₁, x₂) = 1 / (1 + exp(−(x₂ − x₁)ᵀβ))` under the logit link.
pub fn probabilistic_index(fit: &ModelFit, x1: &[f64], x2: &[f64]) -> Result<f64> {
    if fit.link != Link::Logit {
        return Err(Error::UnsupportedLink(format!(
            "probabilistic index has a closed form only for logit, not {}",
            fit.link
        )));
    }
    check_covariates(fit, x1)?;
    check_covariates(fit, x2)?;
    let d: f64 = fit
        .betas()
        .iter()
        .zip(x1.iter().zip(x2))
        .map(|(b, (a, c))| b * (c - a))
        .sum();
    Ok(Link::Logit.cdf(d))
}
