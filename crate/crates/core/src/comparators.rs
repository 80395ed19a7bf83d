//! Reference estimators on the log outcome: single substitution followed by
//! least squares, and the censored lognormal (Tobit) maximum likelihood fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{CensorCode, ValidatedDataset};
use crate::error::{Error, Result};
use crate::inference::normal_critical_value;
use crate::link::Link;

/// Constant substituted for values below a single lower limit `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputationRule {
    /// `l`
    Dl,
    /// `l / 2`
    HalfDl,
    /// `l / √2`
    DlOverSqrt2,
}

impl ImputationRule {
    pub fn impute(self, dl: f64) -> f64 {
        match self {
            Self::Dl => dl,
            Self::HalfDl => dl / 2.0,
            Self::DlOverSqrt2 => dl / std::f64::consts::SQRT_2,
        }
    }
}

/// A normal linear model for `log Y`: `log Y = b₀ + βᵀx + σε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricFit {
    pub intercept: f64,
    pub beta: Vec<f64>,
    pub sigma: f64,
    /// Covariance of `(b₀, β, log σ)`.
    pub vcov: Vec<Vec<f64>>,
    pub loglik: f64,
    pub n_obs: usize,
    pub iterations: usize,
}

impl ParametricFit {
    pub fn n_betas(&self) -> usize {
        self.beta.len()
    }

    pub fn beta_std_errors(&self) -> Vec<f64> {
        (1..=self.beta.len()).map(|j| self.vcov[j][j].max(0.0).sqrt()).collect()
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.beta.len() {
            return Err(Error::CovariateLength {
                expected: self.beta.len(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `b₀ + βᵀx`.
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept + self.beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    fn quad(&self, g: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, gi) in g.iter().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                acc += gi * self.vcov[i][j] * gj;
            }
        }
        acc.max(0.0)
    }

    /// `exp(b₀ + βᵀx + σ z_p)` with a log-scale delta-method interval.
    pub fn quantile(&self, x: &[f64], p: f64, level: f64) -> Result<(f64, f64, f64)> {
        self.check_x(x)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        let zp = Link::Probit.quantile(p);
        let log_q = self.linear_predictor(x) + self.sigma * zp;
        let mut g = vec![1.0];
        g.extend_from_slice(x);
        g.push(self.sigma * zp);
        let se = self.quad(&g).sqrt();
        let z = normal_critical_value(level)?;
        Ok((log_q.exp(), (log_q - z * se).exp(), (log_q + z * se).exp()))
    }

    /// `Φ((log y − b₀ − βᵀx) / σ)` with a probit-scale delta-method interval.
    pub fn cdf(&self, x: &[f64], y: f64, level: f64) -> Result<(f64, f64, f64)> {
        self.check_x(x)?;
        if !(y > 0.0) {
            return Ok((0.0, 0.0, 0.0));
        }
        let s = (y.ln() - self.linear_predictor(x)) / self.sigma;
        let mut g = vec![-1.0 / self.sigma];
        g.extend(x.iter().map(|v| -v / self.sigma));
        g.push(-s);
        let se = self.quad(&g).sqrt();
        let z = normal_critical_value(level)?;
        let f = |t: f64| Link::Probit.cdf(t);
        Ok((f(s), f(s - z * se), f(s + z * se)))
    }
}

fn design(dataset: &ValidatedDataset) -> DMatrix<f64> {
    let p = dataset.p();
    DMatrix::from_fn(
        dataset.len(),
        p + 1,
        |i, j| {
            if j == 0 {
                1.0
            } else {
                dataset.row(i)[j - 1]
            }
        },
    )
}

fn singular(what: &str) -> Error {
    Error::SingularInformation {
        detail: format!("{what} is not positive definite"),
    }
}

struct Ols {
    coef: DVector<f64>,
    rss: f64,
    xtx_inv: DMatrix<f64>,
}

fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Ols> {
    let xtx = x.transpose() * x;
    let chol = xtx.cholesky().ok_or_else(|| singular("XᵀX"))?;
    let coef = chol.solve(&(x.transpose() * y));
    let resid = y - x * &coef;
    Ok(Ols {
        rss: resid.norm_squared(),
        xtx_inv: chol.inverse(),
        coef,
    })
}

/// Replaces values below the (single) lower limit by `rule`, then fits least
/// squares to the log outcome. `σ̂² = RSS/(n − p − 1)`; the `log σ` entry of
/// the covariance uses its large-sample variance `1/(2(n − p − 1))`.
pub fn substitute_and_fit(dataset: &ValidatedDataset, rule: ImputationRule) -> Result<ParametricFit> {
    let mut dl = None;
    for (z, d) in dataset.z().iter().zip(dataset.delta()) {
        match d {
            CensorCode::AboveDL => {
                return Err(Error::MultipleDLsUnsupported(
                    "substitution handles lower limits only".into(),
                ))
            }
            CensorCode::BelowDL => match dl {
                None => dl = Some(*z),
                Some(l) if l != *z => {
                    return Err(Error::MultipleDLsUnsupported(format!(
                        "lower limits {l} and {z} differ"
                    )))
                }
                _ => {}
            },
            CensorCode::Observed => {}
        }
    }
    let mut y = Vec::with_capacity(dataset.len());
    for (index, (z, d)) in dataset.z().iter().zip(dataset.delta()).enumerate() {
        let v = if *d == CensorCode::BelowDL { rule.impute(*z) } else { *z };
        if !(v > 0.0) {
            return Err(Error::NonPositiveOutcome { index, value: *z });
        }
        y.push(v.ln());
    }
    let n = dataset.len();
    let k = dataset.p() + 1;
    if n <= k {
        return Err(Error::InvalidOptions(format!(
            "least squares needs more than {k} observations, found {n}"
        )));
    }
    let x = design(dataset);
    let y = DVector::from_vec(y);
    let fit = ols(&x, &y)?;
    let dof = (n - k) as f64;
    let s2 = fit.rss / dof;
    let mut vcov = vec![vec![0.0; k + 1]; k + 1];
    for i in 0..k {
        for j in 0..k {
            vcov[i][j] = s2 * fit.xtx_inv[(i, j)];
        }
    }
    vcov[k][k] = 1.0 / (2.0 * dof);
    let sigma = s2.sqrt();
    let nf = n as f64;
    let loglik = -0.5 * nf * (2.0 * std::f64::consts::PI * fit.rss / nf).ln() - 0.5 * nf;
    Ok(ParametricFit {
        intercept: fit.coef[0],
        beta: fit.coef.iter().skip(1).copied().collect(),
        sigma,
        vcov,
        loglik,
        n_obs: n,
        iterations: 0,
    })
}

/// Log-likelihood of the censored lognormal model at `(b₀, β, log σ)` and,
/// optionally, its gradient and Hessian.
pub fn lognormal_loglik(
    dataset: &ValidatedDataset,
    params: &[f64],
    derivatives: bool,
) -> (f64, Vec<f64>, DMatrix<f64>) {
    let k = dataset.p() + 1;
    let tau = params[k];
    let sigma = tau.exp();
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let dim = if derivatives { k + 1 } else { 0 };
    let mut grad = vec![0.0; dim];
    let mut hess = DMatrix::zeros(dim, dim);
    let mut ll = 0.0;
    let mut d = vec![0.0; k];
    for i in 0..dataset.len() {
        let row = dataset.row(i);
        d[0] = 1.0;
        d[1..].copy_from_slice(row);
        let eta: f64 = params[..k].iter().zip(&d).map(|(b, v)| b * v).sum();
        let lz = dataset.z()[i].ln();
        // (∂ℓ/∂η, ∂ℓ/∂τ, ∂²/∂η², ∂²/∂η∂τ, ∂²/∂τ²)
        let (term, ge, gt, hee, het, htt) = match dataset.delta()[i] {
            CensorCode::Observed => {
                let r = (lz - eta) / sigma;
                (
                    -0.5 * r * r - tau - half_log_2pi,
                    r / sigma,
                    r * r - 1.0,
                    -1.0 / (sigma * sigma),
                    -2.0 * r / sigma,
                    -2.0 * r * r,
                )
            }
            CensorCode::BelowDL => {
                let s = (lz - eta) / sigma;
                let lam = Link::Probit.pdf_over_cdf(s);
                let c = 1.0 - s * (s + lam);
                (
                    Link::Probit.log_cdf(s),
                    -lam / sigma,
                    -lam * s,
                    -lam * (s + lam) / (sigma * sigma),
                    lam / sigma * c,
                    lam * s * c,
                )
            }
            CensorCode::AboveDL => {
                let t = (eta - lz) / sigma;
                let mu = Link::Probit.pdf_over_cdf(t);
                let c = 1.0 - t * (t + mu);
                (
                    Link::Probit.log_cdf(t),
                    mu / sigma,
                    -mu * t,
                    -mu * (t + mu) / (sigma * sigma),
                    -mu / sigma * c,
                    mu * t * c,
                )
            }
        };
        ll += term;
        if derivatives {
            for a in 0..k {
                grad[a] += ge * d[a];
                for b in 0..=a {
                    hess[(a, b)] += hee * d[a] * d[b];
                }
                hess[(k, a)] += het * d[a];
            }
            grad[k] += gt;
            hess[(k, k)] += htt;
        }
    }
    if derivatives {
        for a in 0..=k {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
    }
    (ll, grad, hess)
}

/// Maximum likelihood for `log Y ~ N(b₀ + βᵀx, σ²)` with each record's limit
/// taken from its own `z`, so per-observation and upper limits are allowed.
/// Newton on `(b₀, β, log σ)` from the least-squares start (censored values
/// set to their limits), with a Levenberg shift whenever the Hessian is not
/// negative definite and step-halving on the log-likelihood.
pub fn censored_lognormal_mle(dataset: &ValidatedDataset) -> Result<ParametricFit> {
    const MAX_ITER: usize = 200;
    const GRAD_TOL: f64 = 1e-9;
    for (index, z) in dataset.z().iter().enumerate() {
        if !(*z > 0.0) {
            return Err(Error::NonPositiveOutcome { index, value: *z });
        }
    }
    let n = dataset.len();
    let k = dataset.p() + 1;
    if n <= k {
        return Err(Error::InvalidOptions(format!(
            "lognormal fit needs more than {k} observations, found {n}"
        )));
    }
    let x = design(dataset);
    let y = DVector::from_iterator(n, dataset.z().iter().map(|z| z.ln()));
    let start = ols(&x, &y)?;
    let mut theta: Vec<f64> = start.coef.iter().copied().collect();
    theta.push((0.5 * (start.rss / n as f64).max(1e-12).ln()).max(-20.0));

    let (mut ll, mut grad, mut hess) = lognormal_loglik(dataset, &theta, true);
    if !ll.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    let mut iterations = 0;
    let mut last_change = f64::INFINITY;
    loop {
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm <= GRAD_TOL * (1.0 + ll.abs()).min(1e3) || last_change <= 1e-13 * ll.abs().max(1.0) {
            break;
        }
        if iterations >= MAX_ITER {
            return Err(Error::NotConverged {
                iterations,
                gradient_norm: gnorm,
                loglik: ll,
            });
        }
        let info = -&hess;
        let mut shift = 0.0;
        let step = loop {
            let mut m = info.clone();
            for a in 0..=k {
                m[(a, a)] += shift;
            }
            if let Some(ch) = m.cholesky() {
                break ch.solve(&DVector::from_column_slice(&grad));
            }
            let scale = info.diagonal().amax().max(1.0);
            shift = if shift == 0.0 { 1e-8 * scale } else { shift * 10.0 };
            if shift > 1e12 * scale {
                return Err(singular("lognormal information"));
            }
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + scale * s).collect();
            let (c_ll, _, _) = lognormal_loglik(dataset, &cand, false);
            if c_ll.is_finite() && c_ll >= ll - 1e-12 * ll.abs().max(1.0) {
                accepted = Some((cand, c_ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, c_ll)) = accepted else {
            return Err(Error::NotConverged {
                iterations,
                gradient_norm: gnorm,
                loglik: ll,
            });
        };
        last_change = if scale == 1.0 { (c_ll - ll).abs() } else { f64::INFINITY };
        theta = cand;
        (ll, grad, hess) = lognormal_loglik(dataset, &theta, true);
        iterations += 1;
    }

    let info = -&hess;
    let vcov = info
        .cholesky()
        .ok_or_else(|| singular("lognormal information at the optimum"))?
        .inverse();
    let vcov = (0..=k)
        .map(|i| (0..=k).map(|j| 0.5 * (vcov[(i, j)] + vcov[(j, i)])).collect())
        .collect();
    Ok(ParametricFit {
        intercept: theta[0],
        beta: theta[1..k].to_vec(),
        sigma: theta[k].exp(),
        vcov,
        loglik: ll,
        n_obs: n,
        iterations,
    })
}
