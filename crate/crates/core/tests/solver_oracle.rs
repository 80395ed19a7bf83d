mod common;

use common::{nelder_mead, random_dataset};
use cpm_core::likelihood::{category_probabilities, gradient};
use cpm_core::solver::initial_theta;
use cpm_core::{
    build_anchor_set, fit, log_likelihood, validate_dataset, AlphaRef, CensorCode, CensoredObservation as Obs,
    FitOptions, Link, ParameterVector, TermKind,
};
use nalgebra::SymmetricEigen;
use std::time::Instant;

fn twelve() -> Vec<Obs> {
    let x = [0.3, -1.2, 0.8, -0.4, 1.5, 0.1, -0.9, 0.6, 1.1, -0.2, 2.0, -1.6];
    let y: [(f64, CensorCode); 12] = [
        (0.5, CensorCode::BelowDL),
        (0.5, CensorCode::BelowDL),
        (1.0, CensorCode::Observed),
        (1.0, CensorCode::Observed),
        (2.0, CensorCode::Observed),
        (3.0, CensorCode::Observed),
        (3.0, CensorCode::Observed),
        (4.0, CensorCode::Observed),
        (5.0, CensorCode::Observed),
        (5.0, CensorCode::Observed),
        (6.0, CensorCode::AboveDL),
        (6.0, CensorCode::AboveDL),
    ];
    y.iter().zip(x).map(|((z, d), x)| Obs::new(*z, *d, vec![x])).collect()
}

#[test]
fn twelve_observation_probit_matches_simplex_oracle() {
    let ds = validate_dataset(&twelve()).unwrap();
    let a = build_anchor_set(&ds).unwrap();
    let m = a.n_alphas();
    assert_eq!(m, 6);
    let f = fit(&ds, &a, Link::Probit, &FitOptions::default()).unwrap();

    // unconstrained coordinates: first alpha, log gaps, beta
    let to_theta = |v: &[f64]| {
        let mut alphas = vec![v[0]];
        for g in &v[1..m] {
            alphas.push(alphas.last().unwrap() + g.exp());
        }
        ParameterVector::new(alphas, vec![v[m]])
    };
    let objective = |v: &[f64]| -log_likelihood(&to_theta(v), &ds, &a, Link::Probit).unwrap();
    let mut start = vec![-1.5];
    start.extend(std::iter::repeat_n((0.5f64).ln(), m - 1));
    start.push(0.0);
    let (best, fbest) = nelder_mead(&objective, &start, 0.5, 1e-13);
    let oracle = to_theta(&best);

    assert!((f.loglik + fbest).abs() < 1e-9, "{} vs {}", f.loglik, -fbest);
    for (x, y) in f.alphas().iter().zip(&oracle.alphas) {
        assert!((x - y).abs() < 1e-5, "alpha {x} vs {y}");
    }
    assert!((f.betas()[0] - oracle.betas[0]).abs() < 1e-5);
}

#[test]
fn intercept_only_fit_is_the_empirical_cdf() {
    for seed in 0..5 {
        let ds = random_dataset(100 + seed, 1000, 1, 0.2, 0.9)
            .select_covariates(&[])
            .unwrap();
        let a = build_anchor_set(&ds).unwrap();
        let k = a.categories.n_categories();
        let mut counts = vec![0usize; k];
        for asg in &a.assignments {
            let c = match (asg.kind, asg.alpha) {
                (TermKind::InteriorCell, AlphaRef::Pair(_, hi)) => hi,
                (TermKind::LowestCell | TermKind::LowerTail, AlphaRef::One(0)) => 0,
                (TermKind::HighestCell | TermKind::UpperTail, AlphaRef::One(j)) => j + 1,
                other => panic!("unexpected {other:?}"),
            };
            counts[c] += 1;
        }
        let start = Instant::now();
        let f = fit(&ds, &a, Link::Logit, &FitOptions::default()).unwrap();
        assert!(start.elapsed().as_secs_f64() < 1.0);
        assert!(f.n_iterations <= 1, "took {} iterations", f.n_iterations);
        let n = ds.len() as f64;
        let mut cum = 0;
        for (j, alpha) in f.alphas().iter().enumerate() {
            cum += counts[j];
            let expected = Link::Logit.quantile(cum as f64 / n);
            assert!((alpha - expected).abs() < 1e-8, "alpha {j}: {alpha} vs {expected}");
        }
    }
}

#[test]
fn banded_covariance_matches_dense_inverse() {
    let ds = random_dataset(7, 80, 3, 0.1, 0.9);
    let a = build_anchor_set(&ds).unwrap();
    for link in Link::ALL {
        let f = fit(&ds, &a, link, &FitOptions::default()).unwrap();
        let dense = cpm_core::likelihood::hessian(&f.theta_hat, &ds, &a, link)
            .unwrap()
            .negated()
            .to_dense()
            .try_inverse()
            .unwrap();
        let scale = dense.amax();
        assert!((&f.vcov - &dense).amax() <= 1e-6 * scale);
        assert!((&f.vcov - f.vcov.transpose()).amax() == 0.0);
        let eig = SymmetricEigen::new(f.vcov.clone());
        assert!(eig.eigenvalues.min() > -1e-8);
        let g = gradient(&f.theta_hat, &ds, &a, link).unwrap();
        assert!(g.iter().all(|v| v.abs() <= 1e-8) || f.gradient_norm <= 1e-8);
        assert!(f.theta_hat.ordering_violation().is_none());
        let init = initial_theta(&a, ds.p(), link);
        assert!(f.loglik >= log_likelihood(&init, &ds, &a, link).unwrap());
    }
}

#[test]
fn censored_values_do_not_matter() {
    let ds = random_dataset(21, 200, 2, 0.25, 0.85);
    let lower = ds
        .z()
        .iter()
        .zip(ds.delta())
        .filter(|(_, d)| **d == CensorCode::BelowDL)
        .map(|(z, _)| *z)
        .fold(f64::INFINITY, f64::min);
    let upper = ds
        .z()
        .iter()
        .zip(ds.delta())
        .filter(|(_, d)| **d == CensorCode::AboveDL)
        .map(|(z, _)| *z)
        .fold(f64::NEG_INFINITY, f64::max);
    let moved: Vec<Obs> = ds
        .observations()
        .into_iter()
        .enumerate()
        .map(|(i, mut o)| {
            match o.delta {
                CensorCode::BelowDL => o.z = lower - 0.01 * (1 + i % 7) as f64,
                CensorCode::AboveDL => o.z = upper + 3.0 * (1 + i % 5) as f64,
                CensorCode::Observed => {}
            }
            o
        })
        .collect();
    let ds2 = validate_dataset(&moved).unwrap();
    for link in Link::ALL {
        let f1 = fit(&ds, &build_anchor_set(&ds).unwrap(), link, &FitOptions::default()).unwrap();
        let f2 = fit(&ds2, &build_anchor_set(&ds2).unwrap(), link, &FitOptions::default()).unwrap();
        assert_eq!(f1.theta_hat, f2.theta_hat);
        assert_eq!(f1.loglik.to_bits(), f2.loglik.to_bits());
        assert_eq!(f1.vcov, f2.vcov);
    }
}

#[test]
fn monotone_transform_leaves_fit_unchanged() {
    let ds = random_dataset(33, 150, 2, 0.2, 0.9);
    let h = |y: f64| y.powi(3) + 2.0 * y;
    let moved: Vec<Obs> = ds
        .observations()
        .into_iter()
        .map(|mut o| {
            o.z = h(o.z);
            o
        })
        .collect();
    let ds2 = validate_dataset(&moved).unwrap();
    let a1 = build_anchor_set(&ds).unwrap();
    let a2 = build_anchor_set(&ds2).unwrap();
    assert_eq!(a1.assignments, a2.assignments);
    let f1 = fit(&ds, &a1, Link::Probit, &FitOptions::default()).unwrap();
    let f2 = fit(&ds2, &a2, Link::Probit, &FitOptions::default()).unwrap();
    for (x, y) in f1.betas().iter().zip(f2.betas()) {
        assert!((x - y).abs() < 1e-10);
    }
    let p1 = category_probabilities(&f1.theta_hat, &f1.categories, Link::Probit, &[0.3, -0.2]);
    let p2 = category_probabilities(&f2.theta_hat, &f2.categories, Link::Probit, &[0.3, -0.2]);
    for (x, y) in p1.iter().zip(&p2) {
        assert!((x - y).abs() < 1e-10);
    }
}
