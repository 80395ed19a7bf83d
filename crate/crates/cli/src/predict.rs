//! Covariate profiles and long-format prediction tables.

use std::collections::BTreeMap;
use std::io::Write;

use cpm_core::{conditional_cdf, conditional_quantile_interval, Link, ModelFit, QuantileValue};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

const RANGE_SLACK: f64 = 1e-9;

fn parse_number(spec: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::InvalidProfile(spec.to_string()))
}

/// Values for one profile entry: `v` or the inclusive grid `start:stop:step`.
fn parse_values(spec: &str, raw: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = raw.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![parse_number(spec, v)?]),
        [a, b, s] => {
            let (start, stop, step) = (parse_number(spec, a)?, parse_number(spec, b)?, parse_number(spec, s)?);
            if step <= 0.0 || stop < start {
                return Err(CliError::InvalidProfile(spec.to_string()));
            }
            let n = ((stop - start) / step + RANGE_SLACK).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(CliError::InvalidProfile(spec.to_string())),
    }
}

/// Expands `name=value,...` specs into covariate vectors ordered like
/// `names`. Ranges form a Cartesian grid; covariates not mentioned are 0.
/// With no specs the single all-zero profile is returned.
pub fn expand_profiles(specs: &[String], names: &[String]) -> Result<Vec<Vec<f64>>> {
    if specs.is_empty() {
        return Ok(vec![vec![0.0; names.len()]]);
    }
    let mut out = Vec::new();
    for spec in specs {
        let mut grid = vec![vec![0.0; names.len()]];
        for entry in spec.split(',').filter(|e| !e.trim().is_empty()) {
            let (name, raw) = entry
                .split_once('=')
                .ok_or_else(|| CliError::InvalidProfile(spec.clone()))?;
            let j = names
                .iter()
                .position(|n| n == name.trim())
                .ok_or_else(|| CliError::UnknownProfileColumn(name.trim().to_string()))?;
            let values = parse_values(spec, raw)?;
            grid = grid
                .iter()
                .flat_map(|x| {
                    values.iter().map(move |v| {
                        let mut x = x.clone();
                        x[j] = *v;
                        x
                    })
                })
                .collect();
        }
        out.extend(grid);
    }
    Ok(out)
}

/// A table cell: a number, or a detection-limit category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Category(QuantileValue),
}

impl From<QuantileValue> for Value {
    fn from(q: QuantileValue) -> Self {
        match q {
            QuantileValue::Numeric { value } => Value::Number(value),
            other => Value::Category(other),
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Number(v) => write!(f, "{v}"),
            Value::Category(q) => write!(f, "{q}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Cdf,
    Quantile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub profile: usize,
    pub covariates: BTreeMap<String, f64>,
    pub quantity: Quantity,
    /// Outcome value for CDF rows, probability for quantile rows.
    pub at: f64,
    pub estimate: Value,
    /// Delta-method standard error; CDF rows only.
    pub se: Option<f64>,
    pub ci_lo: Value,
    pub ci_hi: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub schema_version: u32,
    pub link: Link,
    pub level: f64,
    pub covariate_names: Vec<String>,
    pub rows: Vec<PredictionRow>,
}

pub fn predict(
    fit: &ModelFit,
    profiles: &[Vec<f64>],
    cdf_at: &[f64],
    quantiles: &[f64],
    level: f64,
) -> Result<Predictions> {
    let names = &fit.covariate_names;
    let mut rows = Vec::new();
    for (k, x) in profiles.iter().enumerate() {
        let covariates: BTreeMap<String, f64> = names.iter().cloned().zip(x.iter().copied()).collect();
        for &y in cdf_at {
            let e = conditional_cdf(fit, x, y)?;
            let (lo, hi) = e.interval(fit.link, level)?;
            rows.push(PredictionRow {
                profile: k,
                covariates: covariates.clone(),
                quantity: Quantity::Cdf,
                at: y,
                estimate: Value::Number(e.estimate),
                se: Some(e.se),
                ci_lo: Value::Number(lo),
                ci_hi: Value::Number(hi),
            });
        }
        for &p in quantiles {
            let q = conditional_quantile_interval(fit, x, p, level)?;
            rows.push(PredictionRow {
                profile: k,
                covariates: covariates.clone(),
                quantity: Quantity::Quantile,
                at: p,
                estimate: q.estimate.into(),
                se: None,
                ci_lo: q.lo.into(),
                ci_hi: q.hi.into(),
            });
        }
    }
    Ok(Predictions {
        schema_version: crate::document::SCHEMA_VERSION,
        link: fit.link,
        level,
        covariate_names: names.clone(),
        rows,
    })
}

/// Long-format CSV: `profile, <covariates>, quantity, at, estimate, se,
/// ci_lo, ci_hi`; categories appear as their labels.
pub fn write_predictions_csv<W: Write>(writer: W, pred: &Predictions) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| CliError::io("<csv>", e);
    let mut header = vec!["profile".to_string()];
    header.extend(pred.covariate_names.iter().cloned());
    header.extend(["quantity", "at", "estimate", "se", "ci_lo", "ci_hi"].map(String::from));
    w.write_record(&header).map_err(fail)?;
    for r in &pred.rows {
        let mut rec = vec![r.profile.to_string()];
        rec.extend(pred.covariate_names.iter().map(|n| r.covariates[n].to_string()));
        rec.push(match r.quantity {
            Quantity::Cdf => "cdf".into(),
            Quantity::Quantile => "quantile".into(),
        });
        rec.push(r.at.to_string());
        rec.push(r.estimate.to_string());
        rec.push(r.se.map(|s| s.to_string()).unwrap_or_default());
        rec.push(r.ci_lo.to_string());
        rec.push(r.ci_hi.to_string());
        w.write_record(&rec).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::io("<csv>", e))?;
    Ok(())
}
