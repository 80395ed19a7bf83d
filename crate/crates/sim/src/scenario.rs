//! Study designs, their estimation targets and the true target values.
//!
//! Every design draws `X` and `ε` from standard normals (shifted per site in
//! some multi-site designs), sets `Y* = X + ε` and observes a monotone
//! transform of `Y*` subject to detection limits.

use std::fmt;

use cpm_core::Link;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", content = "scenario", rename_all = "snake_case")]
pub enum Family {
    /// One sample, designs 1–6.
    SingleDl(u8),
    /// Three sites with site-specific limits, designs 1–5.
    MultiDl(u8),
    /// `Y = (Y*)²` with `X ~ N(5, 1)` and a lower limit at 13.12.
    Misspec,
}

impl Family {
    pub fn parse(name: &str, scenario: u8) -> Result<Self> {
        let family = match name {
            "single" | "single_dl" => Family::SingleDl(scenario),
            "multi" | "multi_dl" => Family::MultiDl(scenario),
            "misspec" => Family::Misspec,
            other => return Err(SimError::UnknownFamily(other.to_string())),
        };
        family.validate()?;
        Ok(family)
    }

    pub fn validate(self) -> Result<()> {
        let (name, s, max) = match self {
            Family::SingleDl(s) => ("single", s, 6),
            Family::MultiDl(s) => ("multi", s, 5),
            Family::Misspec => return Ok(()),
        };
        if (1..=max).contains(&s) {
            Ok(())
        } else {
            Err(SimError::UnknownScenario {
                family: name.into(),
                scenario: s,
            })
        }
    }

    /// Total sample size for a per-design `n` (per site for multi-site designs).
    pub fn total_n(self, n: usize) -> usize {
        match self {
            Family::MultiDl(_) => 3 * n,
            _ => n,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::SingleDl(s) => write!(f, "single-{s}"),
            Family::MultiDl(s) => write!(f, "multi-{s}"),
            Family::Misspec => write!(f, "misspec"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub family: Family,
    /// Sample size, or per-site sample size for multi-site designs.
    pub n: usize,
    /// Link used when fitting the CPM.
    pub link: Link,
    pub replicates: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(family: Family, n: usize, replicates: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            link: Link::Probit,
            replicates,
            seed,
        }
    }

    pub fn with_link(mut self, link: Link) -> Self {
        self.link = link;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if self.n < 10 {
            return Err(SimError::InvalidSpec(format!("n must be at least 10, got {}", self.n)));
        }
        if self.replicates < 1 {
            return Err(SimError::InvalidSpec("at least one replicate is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind {
    Beta,
    Quantile { p: f64, x: f64 },
    Cdf { y: f64, x: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    pub kind: TargetKind,
    pub truth: f64,
    /// Value printed in the published tables when it differs from `truth`.
    pub published_truth: Option<f64>,
}

impl Target {
    fn new(kind: TargetKind, truth: f64) -> Self {
        let name = match kind {
            TargetKind::Beta => "beta".to_string(),
            TargetKind::Quantile { p, x } => format!("Q({p}|x={x})"),
            TargetKind::Cdf { y, x } => format!("F({y}|x={x})"),
        };
        Self {
            name,
            kind,
            truth,
            published_truth: None,
        }
    }

    fn published(mut self, value: f64) -> Self {
        if (value - self.truth).abs() > 5e-4 * self.truth.abs().max(1.0) {
            self.published_truth = Some(value);
        }
        self
    }
}

fn phi(x: f64) -> f64 {
    Link::Probit.cdf(x)
}

fn phi_inv(p: f64) -> f64 {
    Link::Probit.quantile(p)
}

/// Three-branch map of design single-6; continuous at neither cut point but
/// strictly increasing.
pub fn scenario_six_transform(ystar: f64) -> f64 {
    if ystar < 0.25f64.ln() {
        (2.0 * ystar).exp()
    } else if ystar < 2.0f64.ln() {
        ystar.exp().sqrt()
    } else {
        ystar.exp()
    }
}

/// Inverse of [`scenario_six_transform`] as a CDF-preserving map: the largest
/// `y*` with `h(y*) ≤ y`.
fn scenario_six_preimage(y: f64) -> f64 {
    let (c1, c2) = (0.25f64.ln(), 2.0f64.ln());
    if y <= 0.0 {
        f64::NEG_INFINITY
    } else if y < (2.0 * c1).exp() {
        0.5 * y.ln()
    } else if y < (0.5 * c1).exp() {
        c1
    } else if y < (0.5 * c2).exp() {
        2.0 * y.ln()
    } else if y < c2.exp() {
        c2
    } else {
        y.ln()
    }
}

/// Median of `(x + ε)²`, by bisection on `Φ(√q − x) − Φ(−√q − x) = 1/2`.
fn squared_normal_quantile(x: f64, p: f64) -> f64 {
    let cdf = |q: f64| phi(q.sqrt() - x) - phi(-q.sqrt() - x);
    let (mut lo, mut hi) = (0.0, (x.abs() + 10.0).powi(2));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Targets with exact truths for the design.
pub fn targets(family: Family) -> Vec<Target> {
    use TargetKind::*;
    let lognormal_q = |p: f64, x: f64| (x + phi_inv(p)).exp();
    let lognormal_f = |y: f64, x: f64| phi(y.ln() - x);
    let standard = |p: f64, y: f64| {
        vec![
            Target::new(Beta, 1.0),
            Target::new(Quantile { p, x: 0.0 }, lognormal_q(p, 0.0)),
            Target::new(Quantile { p, x: 1.0 }, lognormal_q(p, 1.0)),
            Target::new(Cdf { y, x: 0.0 }, lognormal_f(y, 0.0)),
            Target::new(Cdf { y, x: 1.0 }, lognormal_f(y, 1.0)),
        ]
    };
    match family {
        Family::SingleDl(6) => {
            let q = |p: f64, x: f64| scenario_six_transform(x + phi_inv(p));
            let f = |y: f64, x: f64| phi(scenario_six_preimage(y) - x);
            vec![
                Target::new(Beta, 1.0),
                Target::new(Quantile { p: 0.5, x: 0.0 }, q(0.5, 0.0)).published(1.0),
                Target::new(Quantile { p: 0.5, x: 1.0 }, q(0.5, 1.0)).published(0.368),
                Target::new(Cdf { y: 1.5, x: 0.0 }, f(1.5, 0.0)).published(0.654),
                Target::new(Cdf { y: 1.5, x: 1.0 }, f(1.5, 1.0)).published(0.5),
            ]
        }
        Family::SingleDl(_) => standard(0.5, 1.5),
        Family::MultiDl(2 | 4) => standard(0.03, 0.05),
        Family::MultiDl(_) => standard(0.5, 1.5),
        Family::Misspec => vec![
            Target::new(Beta, 1.0),
            Target::new(Quantile { p: 0.5, x: 5.0 }, squared_normal_quantile(5.0, 0.5)).published(24.997),
            Target::new(Quantile { p: 0.5, x: 6.0 }, squared_normal_quantile(6.0, 0.5)).published(35.996),
        ],
    }
}

/// Lower and upper detection limits of one sample or site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Limits {
    const fn new(lower: Option<f64>, upper: Option<f64>) -> Self {
        Self { lower, upper }
    }
}

pub const MISSPEC_LOWER_DL: f64 = 13.12;
pub const MISSPEC_X_MEAN: f64 = 5.0;

pub(crate) fn single_limits(scenario: u8) -> Limits {
    match scenario {
        1 => Limits::new(None, None),
        2 => Limits::new(Some(0.25), None),
        3 => Limits::new(None, Some(4.0)),
        4 => Limits::new(Some(0.25), Some(4.0)),
        5 => Limits::new(Some(4.0), None),
        _ => Limits::new(Some(0.0625), None),
    }
}

/// Per-site limits and covariate means for a multi-site design.
pub(crate) fn multi_sites(scenario: u8) -> [(Limits, f64); 3] {
    let dls = [0.16, 0.30, 0.50];
    let shifted = [-0.5, 0.0, 0.5];
    match scenario {
        1 | 3 => {
            let mu = if scenario == 3 { shifted } else { [0.0; 3] };
            [0, 1, 2].map(|s| (Limits::new(Some(dls[s]), None), mu[s]))
        }
        2 | 4 => {
            let mu = if scenario == 4 { shifted } else { [0.0; 3] };
            [0, 1, 2].map(|s| (Limits::new(None, Some(dls[s])), mu[s]))
        }
        _ => [
            (Limits::new(Some(0.2), None), 0.0),
            (Limits::new(Some(0.3), Some(4.0)), 0.0),
            (Limits::new(None, Some(3.5)), 0.0),
        ],
    }
}

/// Expected (lower, upper) censoring fractions per site, from `Y* ~ N(μ, 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoringRate {
    pub lower: f64,
    pub upper: f64,
}

pub fn expected_censoring(family: Family) -> Result<Vec<CensoringRate>> {
    family.validate()?;
    let sd = std::f64::consts::SQRT_2;
    let rate = |lim: Limits, mu: f64| CensoringRate {
        lower: lim.lower.map_or(0.0, |l| phi((l.ln() - mu) / sd)),
        upper: lim.upper.map_or(0.0, |u| 1.0 - phi((u.ln() - mu) / sd)),
    };
    Ok(match family {
        // design 6 censors exactly when design 2 does
        Family::SingleDl(6) => vec![rate(single_limits(2), 0.0)],
        Family::SingleDl(s) => vec![rate(single_limits(s), 0.0)],
        Family::MultiDl(s) => multi_sites(s).iter().map(|(l, mu)| rate(*l, *mu)).collect(),
        Family::Misspec => {
            // Y* ~ N(5, 2); Y < l iff −√l < Y* < √l
            let r = MISSPEC_LOWER_DL.sqrt();
            vec![CensoringRate {
                lower: phi((r - MISSPEC_X_MEAN) / sd) - phi((-r - MISSPEC_X_MEAN) / sd),
                upper: 0.0,
            }]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_censoring_rates() {
        let r = |f| expected_censoring(f).unwrap();
        assert!((r(Family::SingleDl(2))[0].lower - 0.163).abs() < 5e-4);
        assert!((r(Family::SingleDl(3))[0].upper - 0.163).abs() < 5e-4);
        assert!((r(Family::SingleDl(5))[0].lower - 0.837).abs() < 5e-4);
        let m1: Vec<f64> = r(Family::MultiDl(1)).iter().map(|c| c.lower).collect();
        for (a, b) in m1.iter().zip([0.098, 0.197, 0.312]) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
        assert!((r(Family::MultiDl(3))[0].lower - 0.17).abs() < 5e-3);
        assert!((r(Family::Misspec)[0].lower - 0.17).abs() < 0.01);
    }

    #[test]
    fn standard_truths() {
        let t = targets(Family::SingleDl(2));
        assert_eq!(t[0].name, "beta");
        assert!((t[2].truth - std::f64::consts::E).abs() < 1e-12);
        assert!((t[3].truth - 0.658).abs() < 1e-3);
        assert!((t[4].truth - 0.276).abs() < 1e-3);
        assert!(t.iter().all(|t| t.published_truth.is_none()));
    }

    #[test]
    fn scenario_six_truths_differ_from_published() {
        let t = targets(Family::SingleDl(6));
        assert!((t[1].truth - 1.0).abs() < 1e-12);
        assert!((t[2].truth - std::f64::consts::E).abs() < 1e-12);
        assert_eq!(t[2].published_truth, Some(0.368));
        assert!((t[3].truth - phi(2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn misspec_medians() {
        let t = targets(Family::Misspec);
        assert!((t[1].truth - 25.0).abs() < 1e-6);
        assert!((t[2].truth - 36.0).abs() < 1e-6);
    }

    #[test]
    fn scenario_ranges() {
        assert!(Family::parse("single", 7).is_err());
        assert!(Family::parse("multi", 0).is_err());
        assert!(matches!(Family::parse("grid", 1), Err(SimError::UnknownFamily(_))));
        assert_eq!(Family::parse("multi", 5).unwrap(), Family::MultiDl(5));
        assert!(ScenarioSpec::new(Family::SingleDl(1), 9, 1, 0).validate().is_err());
    }
}
