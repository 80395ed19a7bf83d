//! Newton–Raphson maximization of the nonparametric likelihood.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::anchors::{AlphaRef, AnchorSet, Categories, TermKind};
use crate::banded::SchurFactor;
use crate::data::ValidatedDataset;
use crate::error::{Error, Result};
use crate::likelihood::{evaluate, Order, ParameterVector};
use crate::link::Link;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Sup-norm of the gradient.
    pub gradient_tol: f64,
    /// Relative log-likelihood change on an accepted full step.
    pub loglik_rel_tol: f64,
    pub max_step_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gradient_tol: 1e-8,
            loglik_rel_tol: 1e-10,
            max_step_halvings: 20,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidOptions("max_iterations must be at least 1".into()));
        }
        if !(self.gradient_tol > 0.0) || !(self.loglik_rel_tol > 0.0) {
            return Err(Error::InvalidOptions("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// A fitted cumulative probability model.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub categories: Categories,
    pub link: Link,
    pub covariate_names: Vec<String>,
    pub theta_hat: ParameterVector,
    pub loglik: f64,
    /// Inverse observed information over `(alphas, betas)`.
    pub vcov: DMatrix<f64>,
    pub n_iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub n_obs: usize,
    pub warnings: Vec<String>,
}

impl ModelFit {
    pub fn n_alphas(&self) -> usize {
        self.theta_hat.alphas.len()
    }

    pub fn n_betas(&self) -> usize {
        self.theta_hat.betas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.theta_hat.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.theta_hat.betas
    }

    /// Standard error of entry `i` of `θ` in `(alphas, betas)` order.
    pub fn std_error(&self, i: usize) -> f64 {
        self.vcov[(i, i)].max(0.0).sqrt()
    }

    pub fn beta_std_errors(&self) -> Vec<f64> {
        let m = self.n_alphas();
        (0..self.n_betas()).map(|j| self.std_error(m + j)).collect()
    }

    /// `vᵀ V v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        // gradients of derived quantities are sparse: one or two alphas plus β
        let nz: Vec<usize> = (0..v.len()).filter(|&i| v[i] != 0.0).collect();
        let mut acc = 0.0;
        for &i in &nz {
            let row: f64 = nz.iter().map(|&j| self.vcov[(i, j)] * v[j]).sum();
            acc += v[i] * row;
        }
        acc
    }

    pub(crate) fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                iterations: self.n_iterations,
                gradient_norm: self.gradient_norm,
                loglik: self.loglik,
            })
        }
    }
}

/// Starting values: `α = G(P̂)` from the empirical category distribution and
/// `β = 0`. Censored records whose term spans several categories are spread
/// evenly over them.
pub fn initial_theta(anchors: &AnchorSet, p: usize, link: Link) -> ParameterVector {
    let k = anchors.categories.n_categories();
    let mut weight = vec![0.0; k];
    let mut spread = |lo: usize, hi: usize| {
        let w = 1.0 / (hi - lo + 1) as f64;
        weight[lo..=hi].iter_mut().for_each(|c| *c += w);
    };
    for a in &anchors.assignments {
        match (a.kind, a.alpha) {
            (_, AlphaRef::Certain) => {}
            (TermKind::LowestCell, AlphaRef::One(_)) => spread(0, 0),
            (TermKind::HighestCell, AlphaRef::One(j)) => spread(j + 1, j + 1),
            (TermKind::InteriorCell, AlphaRef::Pair(_, hi)) => spread(hi, hi),
            (TermKind::LowerTail, AlphaRef::One(j)) => spread(0, j),
            (TermKind::UpperTail, AlphaRef::One(j)) => spread(j + 1, k - 1),
            _ => {}
        }
    }
    let total: f64 = weight.iter().sum();
    let n = anchors.assignments.len().max(1) as f64;
    let (lo, hi) = (1.0 / (2.0 * n), 1.0 - 1.0 / (2.0 * n));
    let mut cum = 0.0;
    let mut alphas = Vec::with_capacity(k - 1);
    for w in &weight[..k - 1] {
        cum += w;
        let p_hat = (cum / total).clamp(lo, hi);
        let mut a = link.quantile(p_hat);
        if let Some(prev) = alphas.last().copied() {
            if a <= prev {
                a = prev + 1e-3;
            }
        }
        alphas.push(a);
    }
    ParameterVector::new(alphas, vec![0.0; p])
}

/// Variance beyond which a converged fit is flagged as weakly identified.
const WEAK_IDENTIFICATION_VARIANCE: f64 = 1e6;

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximizes the likelihood by Newton steps solved through the banded
/// Schur-complement factorization, with step-halving to keep the alphas
/// ordered and the log-likelihood from decreasing.
pub fn fit(dataset: &ValidatedDataset, anchors: &AnchorSet, link: Link, options: &FitOptions) -> Result<ModelFit> {
    options.validate()?;
    let start = initial_theta(anchors, dataset.p(), link);
    fit_from(dataset, anchors, link, options, start)
}

/// As [`fit`], from caller-supplied starting values.
pub fn fit_from(
    dataset: &ValidatedDataset,
    anchors: &AnchorSet,
    link: Link,
    options: &FitOptions,
    start: ParameterVector,
) -> Result<ModelFit> {
    options.validate()?;
    let m = anchors.n_alphas();
    let mut theta = start;
    let mut iterations = 0;
    let mut converged_by_loglik = false;

    loop {
        let eval = evaluate(&theta, dataset, anchors, link, Order::Hessian)?;
        let grad = eval.gradient.expect("requested");
        let info = eval.hessian.expect("requested").negated();
        let gnorm = sup_norm(&grad);
        let converged = gnorm <= options.gradient_tol || converged_by_loglik;

        if converged {
            let factor = SchurFactor::new(&info)?;
            let vcov = factor.inverse();
            let mut warnings = anchors.warnings.clone();
            let worst = (0..vcov.nrows()).map(|i| vcov[(i, i)]).fold(0.0, f64::max);
            if worst > WEAK_IDENTIFICATION_VARIANCE {
                warnings.push(format!(
                    "largest parameter variance {worst:e} suggests separation or a near-empty category"
                ));
            }
            return Ok(ModelFit {
                categories: anchors.categories.clone(),
                link,
                covariate_names: dataset.covariate_names().to_vec(),
                theta_hat: theta,
                loglik: eval.loglik,
                vcov,
                n_iterations: iterations,
                converged: true,
                gradient_norm: gnorm,
                n_obs: dataset.len(),
                warnings,
            });
        }
        if iterations >= options.max_iterations {
            return Err(Error::NotConverged {
                iterations,
                gradient_norm: gnorm,
                loglik: eval.loglik,
            });
        }

        let factor = SchurFactor::new(&info)?;
        let step = factor.solve(&grad);
        let current = theta.to_vec();
        let slack = 1e-12 * eval.loglik.abs().max(1.0);

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_step_halvings {
            let cand: Vec<f64> = current.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
            let cand = ParameterVector::from_slice(m, &cand);
            if cand.ordering_violation().is_none() {
                if let Ok(e) = evaluate(&cand, dataset, anchors, link, Order::Value) {
                    if e.loglik >= eval.loglik - slack {
                        accepted = Some((cand, e.loglik));
                        break;
                    }
                }
            }
            scale *= 0.5;
        }
        let Some((next, ll_next)) = accepted else {
            return Err(Error::NonIncreasingAlphasUnrecoverable { iteration: iterations });
        };
        iterations += 1;
        if scale == 1.0 && (ll_next - eval.loglik).abs() <= options.loglik_rel_tol * eval.loglik.abs().max(1e-300) {
            converged_by_loglik = true;
        }
        theta = next;
    }
}
