//! Link functions `G = F⁻¹` and the latent error distributions behind them.
//!
//! Every distribution exposes its CDF, survival function, density, the
//! density derivative and log-scale kernels. The log kernels stay accurate
//! far into the tails, which matters once most of the sample sits in a
//! censored category and linear predictors drift to |u| > 30.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use libm::erfc;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Beyond this distance from zero the probit log kernels switch to the
/// asymptotic Mills-ratio expansion.
const PROBIT_TAIL: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    /// Standard logistic errors; `exp(β)` is an odds ratio.
    Logit,
    /// Standard normal errors.
    Probit,
    /// `F(x) = exp(-exp(-x))`.
    LogLog,
    /// `F(x) = 1 - exp(-exp(x))`.
    CLogLog,
}

impl Link {
    pub const ALL: [Link; 4] = [Link::Logit, Link::Probit, Link::LogLog, Link::CLogLog];

    pub fn name(self) -> &'static str {
        match self {
            Link::Logit => "logit",
            Link::Probit => "probit",
            Link::LogLog => "loglog",
            Link::CLogLog => "cloglog",
        }
    }

    /// `F(x)`.
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Link::Logit => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            Link::Probit => 0.5 * erfc(-x / SQRT_2),
            Link::LogLog => (-(-x).exp()).exp(),
            Link::CLogLog => -(-(x.exp())).exp_m1(),
        }
    }

    /// `1 - F(x)` without cancellation.
    pub fn sf(self, x: f64) -> f64 {
        match self {
            Link::Logit => Link::Logit.cdf(-x),
            Link::Probit => 0.5 * erfc(x / SQRT_2),
            Link::LogLog => -(-(-x).exp()).exp_m1(),
            Link::CLogLog => (-(x.exp())).exp(),
        }
    }

    /// `f(x) = F'(x)`.
    pub fn pdf(self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn log_pdf(self, x: f64) -> f64 {
        match self {
            Link::Logit => -softplus(-x) - softplus(x),
            Link::Probit => -0.5 * x * x - LN_SQRT_2PI,
            Link::LogLog => -x - (-x).exp(),
            Link::CLogLog => x - x.exp(),
        }
    }

    /// `f'(x) / f(x)`; the density derivative is `pdf(x) * score(x)`.
    pub fn score(self, x: f64) -> f64 {
        match self {
            Link::Logit => 1.0 - 2.0 * self.cdf(x),
            Link::Probit => -x,
            Link::LogLog => (-x).exp() - 1.0,
            Link::CLogLog => 1.0 - x.exp(),
        }
    }

    /// `f'(x)`.
    pub fn pdf_derivative(self, x: f64) -> f64 {
        self.pdf(x) * self.score(x)
    }

    /// `log F(x)`.
    pub fn log_cdf(self, x: f64) -> f64 {
        match self {
            Link::Logit => -softplus(-x),
            Link::Probit => {
                if x < -PROBIT_TAIL {
                    probit_log_lower_tail(x)
                } else {
                    self.cdf(x).ln()
                }
            }
            Link::LogLog => -(-x).exp(),
            Link::CLogLog => ln_one_minus_exp_neg(x.exp()),
        }
    }

    /// `log(1 - F(x))`.
    pub fn log_sf(self, x: f64) -> f64 {
        match self {
            Link::Logit => -softplus(x),
            Link::Probit => {
                if x > PROBIT_TAIL {
                    probit_log_lower_tail(-x)
                } else {
                    self.sf(x).ln()
                }
            }
            Link::LogLog => ln_one_minus_exp_neg((-x).exp()),
            Link::CLogLog => -x.exp(),
        }
    }

    /// `f(x) / F(x)`, evaluated on the log scale.
    pub fn pdf_over_cdf(self, x: f64) -> f64 {
        (self.log_pdf(x) - self.log_cdf(x)).exp()
    }

    /// `f(x) / (1 - F(x))`, evaluated on the log scale.
    pub fn pdf_over_sf(self, x: f64) -> f64 {
        (self.log_pdf(x) - self.log_sf(x)).exp()
    }

    /// `G(p) = F⁻¹(p)`.
    pub fn quantile(self, p: f64) -> f64 {
        match self {
            Link::Logit => (p / (1.0 - p)).ln(),
            Link::Probit => probit_quantile(p),
            Link::LogLog => -(-p.ln()).ln(),
            Link::CLogLog => (-(-p).ln_1p()).ln(),
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Link {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logit" | "logistic" => Ok(Link::Logit),
            "probit" => Ok(Link::Probit),
            "loglog" => Ok(Link::LogLog),
            "cloglog" => Ok(Link::CLogLog),
            other => Err(format!(
                "unknown link `{other}` (expected logit, probit, loglog or cloglog)"
            )),
        }
    }
}

/// `log(1 + exp(x))`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log(1 - exp(-t))` for `t > 0`.
fn ln_one_minus_exp_neg(t: f64) -> f64 {
    if t < std::f64::consts::LN_2 {
        (-(-t).exp_m1()).ln()
    } else {
        (-(-t).exp()).ln_1p()
    }
}

/// `log Φ(x)` for very negative `x` via the asymptotic series
/// Inverse-erfc start polished by one Newton step on the accurate `Φ`.
fn probit_quantile(p: f64) -> f64 {
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    let resid = if p <= 0.5 {
        Link::Probit.cdf(x) - p
    } else {
        (1.0 - p) - Link::Probit.sf(x)
    };
    let d = Link::Probit.pdf(x);
    if d > 0.0 {
        x - resid / d
    } else {
        x
    }
}

/// `Φ(x) ≈ φ(x)/(-x) · Σ (-1)^k (2k-1)!! / x^{2k}`.
fn probit_log_lower_tail(x: f64) -> f64 {
    let z2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..12 {
        term *= -((2 * k - 1) as f64) * z2;
        sum += term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * PI).ln() + sum.ln()
}
