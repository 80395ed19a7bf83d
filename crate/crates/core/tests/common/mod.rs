#![allow(dead_code)]

use cpm_core::{validate_dataset, CensoredObservation as Obs, ValidatedDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Nelder–Mead simplex minimizer, restarted from the best vertex until a
/// restart no longer improves the objective.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, ftol: f64) -> (Vec<f64>, f64) {
    let mut best = x0.to_vec();
    let mut best_f = f(&best);
    for _ in 0..50 {
        let (x, fx) = simplex_run(f, &best, step, ftol, 20_000);
        let improved = best_f - fx;
        best = x;
        best_f = fx;
        if improved.abs() <= ftol {
            break;
        }
    }
    (best, best_f)
}

fn simplex_run(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, ftol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    for _ in 0..max_iter {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= ftol * 0.1 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (w - c)).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, p)| b + 0.5 * (p - b)).collect();
                    vals[i] = f(&shrunk);
                    pts[i] = shrunk;
                }
            }
        }
    }
    let i = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (pts[i].clone(), vals[i])
}

/// Central-difference gradient.
pub fn numeric_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// Random dataset with rounded outcomes (so ties occur), a lower limit at
/// the `lower_q` sample quantile and an upper limit at the `upper_q` one.
pub fn random_dataset(seed: u64, n: usize, p: usize, lower_q: f64, upper_q: f64) -> ValidatedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Vec<f64> = (0..p).map(|j| 0.5 - 0.3 * j as f64).collect();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let e: f64 = rng.sample(StandardNormal);
        let y = ((eta + e).exp() * 4.0).round() / 4.0 + 0.25;
        rows.push((y, x));
    }
    let mut ys: Vec<f64> = rows.iter().map(|r| r.0).collect();
    ys.sort_by(f64::total_cmp);
    let lo = ys[((n as f64 * lower_q) as usize).min(n - 1)];
    let hi = ys[((n as f64 * upper_q) as usize).min(n - 1)];
    let obs: Vec<Obs> = rows
        .into_iter()
        .map(|(y, x)| {
            if lower_q > 0.0 && y < lo {
                Obs::below(lo, x)
            } else if upper_q < 1.0 && y > hi {
                Obs::above(hi, x)
            } else {
                Obs::observed(y, x)
            }
        })
        .collect();
    validate_dataset(&obs).unwrap()
}

/// Relative error with a unit floor on the scale.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
