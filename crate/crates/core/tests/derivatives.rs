mod common;

use common::{numeric_gradient, random_dataset, rel_err};
use cpm_core::likelihood::{gradient, hessian};
use cpm_core::{build_anchor_set, log_likelihood, validate_dataset, CensoredObservation as Obs, Link, ParameterVector};

/// A parameter vector with spread, increasing alphas.
fn theta_for(m: usize, p: usize, shift: f64) -> ParameterVector {
    let alphas = (0..m)
        .map(|k| -2.0 + 4.0 * k as f64 / m.max(1) as f64 + shift)
        .collect();
    let betas = (0..p).map(|j| 0.3 - 0.2 * j as f64).collect();
    ParameterVector::new(alphas, betas)
}

#[test]
fn gradient_matches_central_differences() {
    for seed in 0..6 {
        let ds = random_dataset(seed, 40, 2, 0.15, 0.9);
        let a = build_anchor_set(&ds).unwrap();
        for link in Link::ALL {
            let theta = theta_for(a.n_alphas(), 2, 0.1 * seed as f64);
            let m = a.n_alphas();
            let f = |v: &[f64]| log_likelihood(&ParameterVector::from_slice(m, v), &ds, &a, link).unwrap();
            let fd = numeric_gradient(&f, &theta.to_vec(), 1e-5);
            let g = gradient(&theta, &ds, &a, link).unwrap();
            for (i, (x, y)) in g.iter().zip(&fd).enumerate() {
                assert!(rel_err(*x, *y) < 1e-5, "{link} seed {seed} entry {i}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn hessian_matches_differenced_gradient() {
    // ten observations, both limits present
    let obs = vec![
        Obs::below(0.5, vec![0.2]),
        Obs::observed(0.7, vec![-1.1]),
        Obs::observed(0.9, vec![0.4]),
        Obs::observed(1.3, vec![1.7]),
        Obs::observed(1.3, vec![-0.3]),
        Obs::observed(2.0, vec![0.9]),
        Obs::above(2.5, vec![-0.6]),
        Obs::observed(1.1, vec![0.0]),
        Obs::below(0.5, vec![1.2]),
        Obs::above(2.5, vec![2.1]),
    ];
    let ds = validate_dataset(&obs).unwrap();
    let a = build_anchor_set(&ds).unwrap();
    let m = a.n_alphas();
    for link in Link::ALL {
        let theta = theta_for(m, 1, 0.0);
        let dense = hessian(&theta, &ds, &a, link).unwrap().to_dense();
        let h = 1e-5;
        let base = theta.to_vec();
        for j in 0..base.len() {
            let mut up = base.clone();
            let mut dn = base.clone();
            up[j] += h;
            dn[j] -= h;
            let gu = gradient(&ParameterVector::from_slice(m, &up), &ds, &a, link).unwrap();
            let gd = gradient(&ParameterVector::from_slice(m, &dn), &ds, &a, link).unwrap();
            for i in 0..base.len() {
                let fd = (gu[i] - gd[i]) / (2.0 * h);
                assert!(
                    (dense[(i, j)] - fd).abs() < 1e-4,
                    "{link} ({i},{j}): {} vs {fd}",
                    dense[(i, j)]
                );
            }
        }
        for i in 0..m {
            for k in 0..m {
                if i.abs_diff(k) >= 2 {
                    assert_eq!(dense[(i, k)], 0.0);
                }
                assert!((dense[(i, k)] - dense[(k, i)]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn logit_beta_score_has_closed_form() {
    // ∂ℓ/∂β = Σ x_i (γ_{i,j(i)} + γ_{i,j(i)−1} − 1), γ_{i,j} = F(α_j − βᵀx_i)
    let ds = random_dataset(11, 30, 1, 0.0, 1.0);
    let a = build_anchor_set(&ds).unwrap();
    let m = a.n_alphas();
    let theta = theta_for(m, 1, -0.2);
    let g = gradient(&theta, &ds, &a, Link::Logit).unwrap();
    let mut expected = 0.0;
    for i in 0..ds.len() {
        let x = ds.row(i)[0];
        let eta = theta.betas[0] * x;
        let c = a.categories.category_of_value(ds.z()[i]).unwrap();
        let gamma = |k: isize| -> f64 {
            if k < 0 {
                0.0
            } else if k as usize >= m {
                1.0
            } else {
                Link::Logit.cdf(theta.alphas[k as usize] - eta)
            }
        };
        expected += x * (gamma(c as isize) + gamma(c as isize - 1) - 1.0);
    }
    assert!((g[m] - expected).abs() < 1e-10, "{} vs {expected}", g[m]);
}

#[test]
fn intercept_only_information_is_multinomial() {
    let ds = random_dataset(5, 60, 0, 0.1, 0.95);
    let a = build_anchor_set(&ds).unwrap();
    let k = a.categories.n_categories();
    let m = k - 1;
    let n = ds.len() as f64;
    // empirical category shares
    let mut counts = vec![0.0; k];
    for asg in &a.assignments {
        use cpm_core::{AlphaRef, TermKind};
        let c = match (asg.kind, asg.alpha) {
            (TermKind::LowestCell | TermKind::LowerTail, AlphaRef::One(0)) => 0,
            (TermKind::HighestCell | TermKind::UpperTail, AlphaRef::One(j)) if j == m - 1 => k - 1,
            (TermKind::InteriorCell, AlphaRef::Pair(_, hi)) => hi,
            other => panic!("unexpected term {other:?}"),
        };
        counts[c] += 1.0;
    }
    let mut cum = 0.0;
    let alphas: Vec<f64> = counts[..m]
        .iter()
        .map(|c| {
            cum += c / n;
            Link::Logit.quantile(cum)
        })
        .collect();
    let theta = ParameterVector::new(alphas.clone(), vec![]);
    let ds0 = ds.select_covariates(&[]).unwrap();
    let info = hessian(&theta, &ds0, &a, Link::Logit).unwrap().negated().to_dense();
    // brute force: n Σ_c ∇π_c ∇π_cᵀ / π_c
    let f = |x: f64| Link::Logit.pdf(x);
    let mut brute = vec![vec![0.0; m]; m];
    for c in 0..k {
        let mut grad = vec![0.0; m];
        if c < m {
            grad[c] += f(alphas[c]);
        }
        if c > 0 {
            grad[c - 1] -= f(alphas[c - 1]);
        }
        let pi = counts[c] / n;
        for i in 0..m {
            for j in 0..m {
                brute[i][j] += n * grad[i] * grad[j] / pi;
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            assert!(
                rel_err(info[(i, j)], brute[i][j]) < 1e-9,
                "({i},{j}) {} vs {}",
                info[(i, j)],
                brute[i][j]
            );
        }
    }
}

#[test]
fn four_observation_value_matches_high_precision_reference() {
    // Reference computed with 50-digit arithmetic:
    //   log Φ(α₀ − 0.5β) + log(Φ(α₁ − 1.5β) − Φ(α₀ − 1.5β))
    //   + log(Φ(α₂ + 0.25β) − Φ(α₁ + 0.25β)) + log(1 − Φ(α₂ − 2β))
    // at α = (−0.8, 0.3, 1.1), β = 0.6.
    let obs = vec![
        Obs::below(1.0, vec![0.5]),
        Obs::observed(2.0, vec![1.5]),
        Obs::observed(3.0, vec![-0.25]),
        Obs::above(3.5, vec![2.0]),
    ];
    let ds = validate_dataset(&obs).unwrap();
    let a = build_anchor_set(&ds).unwrap();
    let theta = ParameterVector::new(vec![-0.8, 0.3, 1.1], vec![0.6]);
    let got = log_likelihood(&theta, &ds, &a, Link::Probit).unwrap();
    let reference = REFERENCE_FOUR_OBS;
    assert!((got - reference).abs() < 1e-13, "{got} vs {reference}");
}

const REFERENCE_FOUR_OBS: f64 = -5.596_025_059_062_559;
