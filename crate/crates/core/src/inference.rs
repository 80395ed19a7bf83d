//! Wald intervals, likelihood-ratio and score tests, and the midrank
//! statistics behind the rank-sum connection of the binary-covariate score.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::anchors::AnchorSet;
use crate::banded::SchurFactor;
use crate::data::{CensorCode, ValidatedDataset};
use crate::error::{Error, Result};
use crate::likelihood::{evaluate, Order, ParameterVector};
use crate::link::Link;
use crate::solver::{fit, FitOptions, ModelFit};

/// Two-sided standard normal critical value for confidence `level`.
pub fn normal_critical_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidProbability(level));
    }
    Ok(Link::Probit.quantile(0.5 * (1.0 + level)))
}

/// Upper tail `P(χ²_df > x)` via the regularized incomplete gamma function.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    gamma_ur(0.5 * df as f64, 0.5 * x).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// `β̂_j ± z · se`. Exponentiate the endpoints for an odds-ratio interval
/// under the logit link.
pub fn wald_interval(fit: &ModelFit, beta_index: usize, level: f64) -> Result<(f64, f64)> {
    fit.require_converged()?;
    let p = fit.n_betas();
    if beta_index >= p {
        return Err(Error::CoefficientIndex {
            index: beta_index,
            len: p,
        });
    }
    let z = normal_critical_value(level)?;
    let est = fit.betas()[beta_index];
    let se = fit.std_error(fit.n_alphas() + beta_index);
    Ok((est - z * se, est + z * se))
}

/// `2 (ℓ_full − ℓ_reduced)` against `χ²` with the difference in coefficient
/// counts as degrees of freedom.
pub fn likelihood_ratio_test(full: &ModelFit, reduced: &ModelFit) -> Result<TestResult> {
    full.require_converged()?;
    reduced.require_converged()?;
    if full.link != reduced.link {
        return Err(Error::MismatchedData(format!(
            "links differ ({} vs {})",
            full.link, reduced.link
        )));
    }
    if full.n_obs != reduced.n_obs || full.categories != reduced.categories {
        return Err(Error::MismatchedData(
            "observation counts or outcome categories differ".into(),
        ));
    }
    for name in &reduced.covariate_names {
        if !full.covariate_names.contains(name) {
            return Err(Error::NotNested(format!(
                "covariate `{name}` is absent from the full model"
            )));
        }
    }
    if reduced.n_betas() > full.n_betas() {
        return Err(Error::NotNested("reduced model has more coefficients".into()));
    }
    let df = full.n_betas() - reduced.n_betas();
    let raw = 2.0 * (full.loglik - reduced.loglik);
    let slack = 1e-8 * (1.0 + full.loglik.abs());
    if raw < -slack {
        return Err(Error::NotNested(format!(
            "reduced model fits better than the full model (statistic {raw:e})"
        )));
    }
    let statistic = raw.max(0.0);
    let p_value = if df == 0 { 1.0 } else { chi_square_sf(statistic, df) };
    Ok(TestResult { statistic, df, p_value })
}

/// Score test of `β = 0` for all covariates: the intercept-only model is
/// fitted, then `Uᵀ I⁻¹ U` is evaluated at `(α̂, 0)` under the full design.
pub fn score_test(
    dataset: &ValidatedDataset,
    anchors: &AnchorSet,
    link: Link,
    options: &FitOptions,
) -> Result<TestResult> {
    let null_ds = dataset.select_covariates(&[])?;
    let null_fit = fit(&null_ds, anchors, link, options)?;
    let theta = ParameterVector::new(null_fit.theta_hat.alphas.clone(), vec![0.0; dataset.p()]);
    let e = evaluate(&theta, dataset, anchors, link, Order::Hessian)?;
    let info = e.hessian.expect("requested").negated();
    let factor = SchurFactor::new(&info)?;
    let statistic = factor.quadratic_form(&e.gradient.expect("requested")).max(0.0);
    let df = dataset.p();
    Ok(TestResult {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    })
}

/// Midrank summary of a two-group comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonStats {
    /// Midrank of each observation, in input order.
    pub midranks: Vec<f64>,
    /// Midrank sum of group 1.
    pub r1: f64,
    pub n0: usize,
    pub n1: usize,
    /// `R₁ − n₁(n + 1)/2`.
    pub numerator: f64,
}

/// Ranks `1..=n` with ties replaced by the average of the ranks they span.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1
        let r = 0.5 * ((i + 1) + (j + 1)) as f64;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn wilcoxon_stats(values: &[f64], group: &[bool]) -> WilcoxonStats {
    let midranks = midranks(values);
    let n1 = group.iter().filter(|g| **g).count();
    let n = values.len();
    let r1: f64 = midranks.iter().zip(group).filter(|(_, g)| **g).map(|(r, _)| r).sum();
    WilcoxonStats {
        numerator: r1 - (n1 * (n + 1)) as f64 / 2.0,
        midranks,
        r1,
        n0: n - n1,
        n1,
    }
}

/// Score numerator `S = Σ_{x=1} (P̂_{j(i)} + P̂_{j(i)−1} − 1)` for a single
/// 0/1 covariate under the logit link at `β = 0`, computed from the empirical
/// CDF, alongside the midrank statistics; `(n/2)·S = R₁ − n₁(n+1)/2`.
pub fn score_test_binary(dataset: &ValidatedDataset) -> Result<(f64, WilcoxonStats)> {
    if dataset.p() != 1 || dataset.delta().iter().any(|d| *d != CensorCode::Observed) {
        return Err(Error::ScoreTestDesign);
    }
    let x = dataset.column(0);
    let mut group = Vec::with_capacity(x.len());
    for (index, &value) in x.iter().enumerate() {
        match value {
            0.0 => group.push(false),
            1.0 => group.push(true),
            value => return Err(Error::NonBinaryCovariate { index, value }),
        }
    }
    let z = dataset.z();
    let n = z.len() as f64;
    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    // P̂ at y and just below y
    let ecdf = |y: f64| sorted.partition_point(|v| *v <= y) as f64 / n;
    let ecdf_below = |y: f64| sorted.partition_point(|v| *v < y) as f64 / n;
    let s: f64 = z
        .iter()
        .zip(&group)
        .filter(|(_, g)| **g)
        .map(|(y, _)| ecdf(*y) + ecdf_below(*y) - 1.0)
        .sum();
    Ok((s, wilcoxon_stats(z, &group)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{validate_dataset, CensoredObservation as Obs};
    use approx::assert_relative_eq;

    fn ds(y: &[f64], x: &[f64]) -> ValidatedDataset {
        let obs: Vec<Obs> = y.iter().zip(x).map(|(y, x)| Obs::observed(*y, vec![*x])).collect();
        validate_dataset(&obs).unwrap()
    }

    #[test]
    fn hand_computed_score_without_ties() {
        let (s, w) = score_test_binary(&ds(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 1.0, 1.0])).unwrap();
        assert_eq!(w.r1, 7.0);
        assert_eq!(w.numerator, 2.0);
        assert_relative_eq!(s, 1.0, epsilon = 1e-15);
        assert_relative_eq!(2.0 * s, w.numerator, epsilon = 1e-15);
    }

    #[test]
    fn hand_computed_score_with_ties() {
        let (s, w) = score_test_binary(&ds(&[1.0, 1.0, 2.0], &[0.0, 1.0, 1.0])).unwrap();
        assert_eq!(w.midranks, vec![1.5, 1.5, 3.0]);
        assert_eq!(w.r1, 4.5);
        assert_eq!(w.numerator, 0.5);
        assert_relative_eq!(1.5 * s, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn identical_groups_give_zero_score() {
        let (s, w) = score_test_binary(&ds(&[1.0, 3.0, 3.0, 1.0, 3.0, 3.0], &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0])).unwrap();
        assert!(s.abs() < 1e-14);
        assert_eq!(w.r1, (w.n1 * 7) as f64 / 2.0);
    }

    #[test]
    fn midranks_sum_to_triangular_number() {
        let r = midranks(&[5.0, 1.0, 5.0, 5.0, 2.0, 1.0]);
        assert_eq!(r, vec![5.0, 1.5, 5.0, 5.0, 3.0, 1.5]);
        assert_eq!(r.iter().sum::<f64>(), 21.0);
    }

    #[test]
    fn non_binary_and_censored_inputs_are_rejected() {
        assert_eq!(
            score_test_binary(&ds(&[1.0, 2.0], &[0.0, 2.0])).unwrap_err(),
            Error::NonBinaryCovariate { index: 1, value: 2.0 }
        );
        let obs = vec![Obs::observed(1.0, vec![0.0]), Obs::below(0.5, vec![1.0])];
        assert_eq!(
            score_test_binary(&validate_dataset(&obs).unwrap()).unwrap_err(),
            Error::ScoreTestDesign
        );
    }

    #[test]
    fn chi_square_tail_reference_values() {
        // P(χ²_1 > 3.841459) = 0.05, P(χ²_2 > x) = exp(-x/2)
        assert_relative_eq!(chi_square_sf(3.841_458_820_694_124, 1), 0.05, max_relative = 1e-10);
        assert_relative_eq!(chi_square_sf(4.0, 2), (-2.0f64).exp(), max_relative = 1e-12);
        assert_eq!(chi_square_sf(0.0, 3), 1.0);
    }

    #[test]
    fn critical_value() {
        assert_relative_eq!(
            normal_critical_value(0.95).unwrap(),
            1.959_963_984_540_054,
            max_relative = 1e-12
        );
        assert!(normal_critical_value(1.0).is_err());
    }
}
