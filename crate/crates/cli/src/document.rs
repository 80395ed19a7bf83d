//! JSON fit document: everything needed to recompute predictions, plus a
//! readable summary of coefficients and anchors.

use std::collections::BTreeMap;

use cpm_core::inference::normal_critical_value;
use cpm_core::{AnchorSet, Categories, Link, ModelFit, ParameterVector, TermKind};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `exp(β)` with its interval; logit link only.
    pub odds_ratio: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub name: String,
    /// Category whose upper boundary this alpha is.
    pub category: String,
    pub estimate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSummary {
    pub n_values: usize,
    pub n_categories: usize,
    pub n_alphas: usize,
    pub lower_label: Option<String>,
    pub upper_label: Option<String>,
    /// Records per likelihood-term kind.
    pub term_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub loglik: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub schema_version: u32,
    pub link: Link,
    pub level: f64,
    pub n_obs: usize,
    pub coefficients: Vec<Coefficient>,
    pub alphas: Vec<Alpha>,
    pub anchors: AnchorSummary,
    pub convergence: Convergence,
    pub categories: Categories,
    /// Covariance over `(alphas, betas)`, row-major.
    pub vcov: Vec<Vec<f64>>,
}

fn term_name(kind: TermKind) -> &'static str {
    match kind {
        TermKind::LowestCell => "lowest_cell",
        TermKind::InteriorCell => "interior_cell",
        TermKind::HighestCell => "highest_cell",
        TermKind::LowerTail => "lower_tail",
        TermKind::UpperTail => "upper_tail",
    }
}

impl FitDocument {
    pub fn new(fit: &ModelFit, anchors: &AnchorSet, level: f64) -> Result<Self> {
        let z = normal_critical_value(level)?;
        let se = fit.beta_std_errors();
        let coefficients = fit
            .covariate_names
            .iter()
            .zip(fit.betas())
            .zip(&se)
            .map(|((name, b), s)| {
                let (lo, hi) = (b - z * s, b + z * s);
                Coefficient {
                    name: name.clone(),
                    estimate: *b,
                    se: *s,
                    ci_lo: lo,
                    ci_hi: hi,
                    odds_ratio: (fit.link == Link::Logit).then(|| Interval {
                        estimate: b.exp(),
                        lo: lo.exp(),
                        hi: hi.exp(),
                    }),
                }
            })
            .collect();
        let cats = &fit.categories;
        let alphas = fit
            .alphas()
            .iter()
            .enumerate()
            .map(|(k, a)| Alpha {
                name: cats.alpha_label(k),
                category: cats.category_label(k),
                estimate: *a,
                se: fit.std_error(k),
            })
            .collect();
        let mut term_counts = BTreeMap::new();
        for a in &anchors.assignments {
            *term_counts.entry(term_name(a.kind).to_string()).or_insert(0) += 1;
        }
        let vcov = (0..fit.vcov.nrows())
            .map(|i| fit.vcov.row(i).iter().copied().collect())
            .collect();
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            link: fit.link,
            level,
            n_obs: fit.n_obs,
            coefficients,
            alphas,
            anchors: AnchorSummary {
                n_values: cats.n_values(),
                n_categories: cats.n_categories(),
                n_alphas: cats.n_alphas(),
                lower_label: cats.has_lower_cat.then(|| cats.lower_label.clone()).flatten(),
                upper_label: cats.has_upper_cat.then(|| cats.upper_label.clone()).flatten(),
                term_counts,
            },
            convergence: Convergence {
                converged: fit.converged,
                iterations: fit.n_iterations,
                gradient_norm: fit.gradient_norm,
                loglik: fit.loglik,
                warnings: fit.warnings.clone(),
            },
            categories: cats.clone(),
            vcov,
        })
    }

    /// Rebuilds the model needed for predictions.
    pub fn to_fit(&self) -> Result<ModelFit> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Document(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let m = self.alphas.len();
        let d = m + self.coefficients.len();
        if self.categories.n_alphas() != m || self.vcov.len() != d || self.vcov.iter().any(|r| r.len() != d) {
            return Err(CliError::Document(
                "dimensions of alphas, coefficients and vcov disagree".into(),
            ));
        }
        Ok(ModelFit {
            categories: self.categories.clone(),
            link: self.link,
            covariate_names: self.coefficients.iter().map(|c| c.name.clone()).collect(),
            theta_hat: ParameterVector::new(
                self.alphas.iter().map(|a| a.estimate).collect(),
                self.coefficients.iter().map(|c| c.estimate).collect(),
            ),
            loglik: self.convergence.loglik,
            vcov: DMatrix::from_fn(d, d, |i, j| self.vcov[i][j]),
            n_iterations: self.convergence.iterations,
            converged: self.convergence.converged,
            gradient_norm: self.convergence.gradient_norm,
            n_obs: self.n_obs,
            warnings: self.convergence.warnings.clone(),
        })
    }
}
