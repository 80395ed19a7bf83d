//! Observations subject to detection limits and dataset validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an outcome was recorded relative to its detection limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CensorCode {
    /// The outcome itself was measured; `z` is the outcome.
    Observed,
    /// The outcome fell below a lower detection limit; `z` is that limit.
    BelowDL,
    /// The outcome exceeded an upper detection limit; `z` is that limit.
    AboveDL,
}

impl CensorCode {
    pub fn is_censored(self) -> bool {
        !matches!(self, CensorCode::Observed)
    }
}

/// One record `(z, δ, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredObservation {
    pub z: f64,
    pub delta: CensorCode,
    pub x: Vec<f64>,
}

impl CensoredObservation {
    pub fn new(z: f64, delta: CensorCode, x: Vec<f64>) -> Self {
        Self { z, delta, x }
    }

    pub fn observed(z: f64, x: Vec<f64>) -> Self {
        Self::new(z, CensorCode::Observed, x)
    }

    pub fn below(dl: f64, x: Vec<f64>) -> Self {
        Self::new(dl, CensorCode::BelowDL, x)
    }

    pub fn above(dl: f64, x: Vec<f64>) -> Self {
        Self::new(dl, CensorCode::AboveDL, x)
    }
}

/// A dataset that passed validation. Covariates are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedDataset {
    z: Vec<f64>,
    delta: Vec<CensorCode>,
    x: Vec<f64>,
    p: usize,
    covariate_names: Vec<String>,
}

/// Validates raw observations. Covariate names default to `x1..xp`.
pub fn validate_dataset(observations: &[CensoredObservation]) -> Result<ValidatedDataset> {
    let first = observations.first().ok_or(Error::EmptyData)?;
    let p = first.x.len();
    let n = observations.len();
    let mut z = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * p);
    for (index, obs) in observations.iter().enumerate() {
        if obs.x.len() != p {
            return Err(Error::InconsistentDimensions {
                index,
                expected: p,
                found: obs.x.len(),
            });
        }
        if !obs.z.is_finite() || obs.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        // -0.0 and 0.0 must land in the same anchor
        z.push(obs.z + 0.0);
        delta.push(obs.delta);
        x.extend_from_slice(&obs.x);
    }
    if !delta.contains(&CensorCode::Observed) {
        return Err(Error::NoUncensoredValues);
    }
    Ok(ValidatedDataset {
        z,
        delta,
        x,
        p,
        covariate_names: (1..=p).map(|j| format!("x{j}")).collect(),
    })
}

impl ValidatedDataset {
    pub fn new(observations: &[CensoredObservation]) -> Result<Self> {
        validate_dataset(observations)
    }

    /// Replaces the default covariate names.
    pub fn with_covariate_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::CovariateLength {
                expected: self.p,
                found: names.len(),
            });
        }
        self.covariate_names = names;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Number of covariates.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn delta(&self) -> &[CensorCode] {
        &self.delta
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Covariate row of observation `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    /// Column `j` of the covariate matrix.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.x[i * self.p + j]).collect()
    }

    pub fn censored_fraction(&self) -> f64 {
        let c = self.delta.iter().filter(|d| d.is_censored()).count();
        c as f64 / self.len() as f64
    }

    /// Keeps only the named covariates, in the given order.
    pub fn select_covariates(&self, names: &[&str]) -> Result<ValidatedDataset> {
        let idx: Vec<usize> = names
            .iter()
            .map(|name| {
                self.covariate_names
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::NotNested(format!("unknown covariate `{name}`")))
            })
            .collect::<Result<_>>()?;
        let mut x = Vec::with_capacity(self.len() * idx.len());
        for i in 0..self.len() {
            let row = self.row(i);
            x.extend(idx.iter().map(|&j| row[j]));
        }
        Ok(ValidatedDataset {
            z: self.z.clone(),
            delta: self.delta.clone(),
            x,
            p: idx.len(),
            covariate_names: names.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// Back to owned observations.
    pub fn observations(&self) -> Vec<CensoredObservation> {
        (0..self.len())
            .map(|i| CensoredObservation::new(self.z[i], self.delta[i], self.row(i).to_vec()))
            .collect()
    }
}
