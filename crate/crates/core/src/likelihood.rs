//! Nonparametric log-likelihood with analytic gradient and banded Hessian.
//!
//! Every observation's term involves one alpha or two adjacent alphas, so
//! the alpha–alpha block of the Hessian is tridiagonal. Derivatives are
//! accumulated per observation straight into banded storage.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::anchors::{AlphaRef, AnchorSet, Categories, TermKind};
use crate::data::ValidatedDataset;
use crate::error::{Error, Result};
use crate::link::Link;

/// Cell probabilities are floored here before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

/// `θ = (α, β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl ParameterVector {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Self {
        Self { alphas, betas }
    }

    pub fn len(&self) -> usize {
        self.alphas.len() + self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened in `(alphas, betas)` order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.alphas.clone();
        v.extend_from_slice(&self.betas);
        v
    }

    pub fn from_slice(n_alphas: usize, flat: &[f64]) -> Self {
        Self {
            alphas: flat[..n_alphas].to_vec(),
            betas: flat[n_alphas..].to_vec(),
        }
    }

    /// Position of the first ordering violation, if any.
    pub fn ordering_violation(&self) -> Option<usize> {
        self.alphas.windows(2).position(|w| !(w[0] < w[1])).map(|k| k + 1)
    }

    /// `βᵀx`.
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.betas.iter().zip(x).map(|(b, v)| b * v).sum()
    }
}

/// Symmetric Hessian whose alpha block is tridiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedHessian {
    pub alpha_diag: Vec<f64>,
    /// `alpha_offdiag[k]` couples alphas `k` and `k + 1`.
    pub alpha_offdiag: Vec<f64>,
    /// `#alphas × p`.
    pub alpha_beta: DMatrix<f64>,
    /// `p × p`.
    pub beta_block: DMatrix<f64>,
}

impl BandedHessian {
    fn zeros(m: usize, p: usize) -> Self {
        Self {
            alpha_diag: vec![0.0; m],
            alpha_offdiag: vec![0.0; m.saturating_sub(1)],
            alpha_beta: DMatrix::zeros(m, p),
            beta_block: DMatrix::zeros(p, p),
        }
    }

    pub fn n_alphas(&self) -> usize {
        self.alpha_diag.len()
    }

    pub fn n_betas(&self) -> usize {
        self.beta_block.nrows()
    }

    /// Full symmetric matrix; for diagnostics and small problems only.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.n_alphas();
        let p = self.n_betas();
        let mut h = DMatrix::zeros(m + p, m + p);
        for k in 0..m {
            h[(k, k)] = self.alpha_diag[k];
        }
        for k in 0..m.saturating_sub(1) {
            h[(k, k + 1)] = self.alpha_offdiag[k];
            h[(k + 1, k)] = self.alpha_offdiag[k];
        }
        for k in 0..m {
            for j in 0..p {
                h[(k, m + j)] = self.alpha_beta[(k, j)];
                h[(m + j, k)] = self.alpha_beta[(k, j)];
            }
        }
        for i in 0..p {
            for j in 0..p {
                h[(m + i, m + j)] = self.beta_block[(i, j)];
            }
        }
        h
    }

    /// Elementwise negation, giving the observed information.
    pub fn negated(&self) -> BandedHessian {
        BandedHessian {
            alpha_diag: self.alpha_diag.iter().map(|v| -v).collect(),
            alpha_offdiag: self.alpha_offdiag.iter().map(|v| -v).collect(),
            alpha_beta: -&self.alpha_beta,
            beta_block: -&self.beta_block,
        }
    }
}

/// Log-likelihood together with optional derivatives.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loglik: f64,
    pub gradient: Option<Vec<f64>>,
    pub hessian: Option<BandedHessian>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    Hessian,
}

fn check_theta(theta: &ParameterVector, dataset: &ValidatedDataset, anchors: &AnchorSet) -> Result<()> {
    let m = anchors.n_alphas();
    if theta.alphas.len() != m || theta.betas.len() != dataset.p() {
        return Err(Error::ParameterDimension {
            expected: m + dataset.p(),
            found: theta.len(),
        });
    }
    if let Some(position) = theta.ordering_violation() {
        return Err(Error::NonIncreasingAlphas { position });
    }
    Ok(())
}

/// Derivatives of one log term with respect to the link-scale arguments
/// `u = α − η` it depends on.
struct TermDerivs {
    value: f64,
    /// `(alpha, d/du, d²/du²)` for each argument.
    first: (usize, f64, f64),
    /// Second argument of an interior cell plus the cross derivative.
    second: Option<(usize, f64, f64, f64)>,
}

fn lower_term(link: Link, k: usize, u: f64) -> TermDerivs {
    let r = link.pdf_over_cdf(u);
    TermDerivs {
        value: link.log_cdf(u),
        first: (k, r, r * (link.score(u) - r)),
        second: None,
    }
}

fn upper_term(link: Link, k: usize, u: f64) -> TermDerivs {
    let r = link.pdf_over_sf(u);
    TermDerivs {
        value: link.log_sf(u),
        first: (k, -r, -r * (link.score(u) + r)),
        second: None,
    }
}

fn cell_term(link: Link, lo: usize, hi: usize, u_lo: f64, u_hi: f64) -> TermDerivs {
    let diff = if u_lo >= 0.0 {
        link.sf(u_lo) - link.sf(u_hi)
    } else {
        link.cdf(u_hi) - link.cdf(u_lo)
    };
    let d = diff.max(PROB_FLOOR);
    let r_hi = link.pdf(u_hi) / d;
    let r_lo = link.pdf(u_lo) / d;
    TermDerivs {
        value: d.ln(),
        first: (hi, r_hi, r_hi * link.score(u_hi) - r_hi * r_hi),
        second: Some((lo, -r_lo, -r_lo * link.score(u_lo) - r_lo * r_lo, r_hi * r_lo)),
    }
}

/// Evaluates the log-likelihood and, depending on `order`, its derivatives.
pub fn evaluate(
    theta: &ParameterVector,
    dataset: &ValidatedDataset,
    anchors: &AnchorSet,
    link: Link,
    order: Order,
) -> Result<Evaluation> {
    check_theta(theta, dataset, anchors)?;
    let m = anchors.n_alphas();
    let p = dataset.p();
    let want_grad = order >= Order::Gradient;
    let want_hess = order >= Order::Hessian;

    let mut loglik = 0.0;
    let mut grad = vec![0.0; if want_grad { m + p } else { 0 }];
    let mut hess = if want_hess {
        Some(BandedHessian::zeros(m, p))
    } else {
        None
    };

    for (i, a) in anchors.assignments.iter().enumerate() {
        let x = dataset.row(i);
        let eta = theta.linear_predictor(x);
        let t = match (a.kind, a.alpha) {
            (_, AlphaRef::Certain) => continue,
            (TermKind::LowestCell | TermKind::LowerTail, AlphaRef::One(k)) => {
                lower_term(link, k, theta.alphas[k] - eta)
            }
            (TermKind::HighestCell | TermKind::UpperTail, AlphaRef::One(k)) => {
                upper_term(link, k, theta.alphas[k] - eta)
            }
            (TermKind::InteriorCell, AlphaRef::Pair(lo, hi)) => {
                cell_term(link, lo, hi, theta.alphas[lo] - eta, theta.alphas[hi] - eta)
            }
            (kind, alpha) => {
                return Err(Error::InternalAssignmentError {
                    index: i,
                    reason: format!("term {kind:?} cannot use {alpha:?}"),
                })
            }
        };
        loglik += t.value;
        if !want_grad {
            continue;
        }

        let (k1, d1, dd1) = t.first;
        // total derivative with respect to η is minus the sum over arguments
        let mut d_eta = d1;
        grad[k1] += d1;
        if let Some((k2, d2, _, _)) = t.second {
            grad[k2] += d2;
            d_eta += d2;
        }
        for (g, xj) in grad[m..].iter_mut().zip(x) {
            *g -= xj * d_eta;
        }

        if let Some(h) = hess.as_mut() {
            // row sums of the 2x2 (or 1x1) block in u give the alpha–beta terms
            let (row1, row2, total) = match t.second {
                None => (dd1, 0.0, dd1),
                Some((k2, _, dd2, cross)) => {
                    h.alpha_diag[k2] += dd2;
                    h.alpha_offdiag[k2.min(k1)] += cross;
                    (dd1 + cross, dd2 + cross, dd1 + dd2 + 2.0 * cross)
                }
            };
            h.alpha_diag[k1] += dd1;
            for j in 0..p {
                h.alpha_beta[(k1, j)] -= x[j] * row1;
            }
            if let Some((k2, ..)) = t.second {
                for j in 0..p {
                    h.alpha_beta[(k2, j)] -= x[j] * row2;
                }
            }
            for r in 0..p {
                let xr = x[r] * total;
                for c in 0..=r {
                    h.beta_block[(r, c)] += xr * x[c];
                }
            }
        }
    }

    if !loglik.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    if let Some(h) = hess.as_mut() {
        for r in 0..p {
            for c in 0..r {
                h.beta_block[(c, r)] = h.beta_block[(r, c)];
            }
        }
    }
    Ok(Evaluation {
        loglik,
        gradient: want_grad.then_some(grad),
        hessian: hess,
    })
}

pub fn log_likelihood(
    theta: &ParameterVector,
    dataset: &ValidatedDataset,
    anchors: &AnchorSet,
    link: Link,
) -> Result<f64> {
    Ok(evaluate(theta, dataset, anchors, link, Order::Value)?.loglik)
}

/// Gradient in `(alphas, betas)` order.
pub fn gradient(
    theta: &ParameterVector,
    dataset: &ValidatedDataset,
    anchors: &AnchorSet,
    link: Link,
) -> Result<Vec<f64>> {
    Ok(evaluate(theta, dataset, anchors, link, Order::Gradient)?
        .gradient
        .expect("requested"))
}

pub fn hessian(
    theta: &ParameterVector,
    dataset: &ValidatedDataset,
    anchors: &AnchorSet,
    link: Link,
) -> Result<BandedHessian> {
    Ok(evaluate(theta, dataset, anchors, link, Order::Hessian)?
        .hessian
        .expect("requested"))
}

/// Multinomial probabilities of every category given covariates `x`.
pub fn category_probabilities(theta: &ParameterVector, categories: &Categories, link: Link, x: &[f64]) -> Vec<f64> {
    let eta = theta.linear_predictor(x);
    let mut out = Vec::with_capacity(categories.n_categories());
    let mut prev = 0.0;
    for a in &theta.alphas {
        let c = link.cdf(a - eta);
        out.push(c - prev);
        prev = c;
    }
    out.push(1.0 - prev);
    out
}
