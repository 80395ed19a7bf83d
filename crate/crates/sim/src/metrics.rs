use serde::{Deserialize, Serialize};

use crate::estimator::Draw;

/// Replicate summary for one estimator and target. Spread uses the
/// population (1/R) convention so that `rmse² = bias² + empirical_se²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub estimator: String,
    pub parameter: String,
    pub truth: f64,
    pub published_truth: Option<f64>,
    pub mean_estimate: f64,
    pub percent_bias: f64,
    /// Mean estimate minus truth.
    pub absolute_bias: f64,
    pub empirical_se: f64,
    pub rmse: f64,
    pub coverage: f64,
    /// Replicates contributing to the row.
    pub replicates: usize,
    /// Replicates whose estimate was scored at a limit or structural bound.
    pub flagged: usize,
}

/// Aggregates draws in the order given; callers pass them in replicate order
/// so sums are reproducible.
pub fn summarize(
    estimator: &str,
    parameter: &str,
    truth: f64,
    published_truth: Option<f64>,
    draws: &[Draw],
) -> MetricsRow {
    let r = draws.len() as f64;
    let mean = draws.iter().map(|d| d.score).sum::<f64>() / r;
    let var = draws.iter().map(|d| (d.score - mean).powi(2)).sum::<f64>() / r;
    let bias = mean - truth;
    MetricsRow {
        estimator: estimator.to_string(),
        parameter: parameter.to_string(),
        truth,
        published_truth,
        mean_estimate: mean,
        percent_bias: 100.0 * bias / truth,
        absolute_bias: bias,
        empirical_se: var.sqrt(),
        rmse: direct_rmse(draws, truth),
        coverage: draws.iter().filter(|d| d.covered).count() as f64 / r,
        replicates: draws.len(),
        flagged: draws.iter().filter(|d| d.flagged).count(),
    }
}

/// `sqrt(mean((θ̂ − θ)²))`.
pub fn direct_rmse(draws: &[Draw], truth: f64) -> f64 {
    (draws.iter().map(|d| (d.score - truth).powi(2)).sum::<f64>() / draws.len() as f64).sqrt()
}
