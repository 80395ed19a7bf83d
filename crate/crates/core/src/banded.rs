//! Block solves against `[A B; Bᵀ C]` where `A` is symmetric positive
//! definite and tridiagonal.
//!
//! `A` is factored as `L Lᵀ` with bidiagonal `L`, the alphas are eliminated,
//! and the small `p × p` Schur complement `C − Bᵀ A⁻¹ B` is factored densely.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::likelihood::BandedHessian;

/// Relative pivot size below which the coefficient block counts as singular.
const SCHUR_PIVOT_RTOL: f64 = 1e-12;

/// Cholesky factor of a symmetric positive definite tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalCholesky {
    /// Diagonal of `L`.
    diag: Vec<f64>,
    /// `sub[k]` is `L[k + 1, k]`.
    sub: Vec<f64>,
}

impl TridiagonalCholesky {
    pub fn factor(diag: &[f64], offdiag: &[f64]) -> Result<Self> {
        let m = diag.len();
        let mut l = Vec::with_capacity(m);
        let mut sub = Vec::with_capacity(m.saturating_sub(1));
        for k in 0..m {
            let mut pivot = diag[k];
            if k > 0 {
                let s = offdiag[k - 1] / l[k - 1];
                sub.push(s);
                pivot -= s * s;
            }
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::SingularInformation {
                    detail: format!("non-positive pivot {pivot:e} in alpha block at position {k}"),
                });
            }
            l.push(pivot.sqrt());
        }
        Ok(Self { diag: l, sub })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = self.dim();
        if m == 0 {
            return;
        }
        b[0] /= self.diag[0];
        for k in 1..m {
            b[k] = (b[k] - self.sub[k - 1] * b[k - 1]) / self.diag[k];
        }
        b[m - 1] /= self.diag[m - 1];
        for k in (0..m - 1).rev() {
            b[k] = (b[k] - self.sub[k] * b[k + 1]) / self.diag[k];
        }
    }

    pub fn log_determinant(&self) -> f64 {
        2.0 * self.diag.iter().map(|d| d.ln()).sum::<f64>()
    }
}

/// Factorization of a positive definite information matrix with a
/// tridiagonal alpha block.
#[derive(Debug, Clone)]
pub struct SchurFactor {
    alpha: TridiagonalCholesky,
    b: DMatrix<f64>,
    /// `A⁻¹ B`.
    w: DMatrix<f64>,
    schur: Option<Cholesky<f64, Dyn>>,
}

impl SchurFactor {
    /// Factors `info`, typically the negated Hessian.
    pub fn new(info: &BandedHessian) -> Result<Self> {
        let m = info.n_alphas();
        let p = info.n_betas();
        let alpha = TridiagonalCholesky::factor(&info.alpha_diag, &info.alpha_offdiag)?;
        let mut w = info.alpha_beta.clone();
        let mut col = vec![0.0; m];
        for j in 0..p {
            col.copy_from_slice(w.column(j).as_slice());
            alpha.solve_in_place(&mut col);
            w.column_mut(j).copy_from_slice(&col);
        }
        let schur = if p > 0 {
            let mut s = &info.beta_block - info.alpha_beta.transpose() * &w;
            // symmetrize away rounding before the dense factorization
            s = (&s + s.transpose()) * 0.5;
            let scale = s.diagonal().max();
            let chol = Cholesky::new(s).ok_or_else(|| Error::SingularInformation {
                detail: "Schur complement for the coefficients is not positive definite".into(),
            })?;
            let min_pivot = chol.l_dirty().diagonal().map(|d| d * d).min();
            if !(min_pivot > SCHUR_PIVOT_RTOL * scale) {
                return Err(Error::SingularInformation {
                    detail: format!("coefficients are numerically collinear (pivot {min_pivot:e}, scale {scale:e})"),
                });
            }
            Some(chol)
        } else {
            None
        };
        Ok(Self {
            alpha,
            b: info.alpha_beta.clone(),
            w,
            schur,
        })
    }

    pub fn n_alphas(&self) -> usize {
        self.alpha.dim()
    }

    pub fn n_betas(&self) -> usize {
        self.b.ncols()
    }

    /// Solves `info · x = g` for `g` in `(alphas, betas)` order.
    pub fn solve(&self, g: &[f64]) -> Vec<f64> {
        let m = self.n_alphas();
        let mut ga = g[..m].to_vec();
        self.alpha.solve_in_place(&mut ga);
        let mut out = ga.clone();
        if let Some(schur) = &self.schur {
            let gb = DVector::from_column_slice(&g[m..]);
            let rhs = gb - self.b.transpose() * DVector::from_column_slice(&ga);
            let db = schur.solve(&rhs);
            let correction = &self.w * &db;
            for (o, c) in out.iter_mut().zip(correction.iter()) {
                *o -= c;
            }
            out.extend(db.iter());
        }
        out
    }

    /// `vᵀ info⁻¹ v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let x = self.solve(v);
        v.iter().zip(&x).map(|(a, b)| a * b).sum()
    }

    /// Dense inverse assembled blockwise from the banded factor; the alpha
    /// block is never inverted densely.
    pub fn inverse(&self) -> DMatrix<f64> {
        let m = self.n_alphas();
        let p = self.n_betas();
        let mut v = DMatrix::zeros(m + p, m + p);
        let mut col = vec![0.0; m];
        for k in 0..m {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[k] = 1.0;
            self.alpha.solve_in_place(&mut col);
            for (i, c) in col.iter().enumerate() {
                v[(i, k)] = *c;
            }
        }
        if let Some(schur) = &self.schur {
            let s_inv = schur.inverse();
            let ws = &self.w * &s_inv;
            let wsw = &ws * self.w.transpose();
            for i in 0..m {
                for k in 0..m {
                    v[(i, k)] += wsw[(i, k)];
                }
                for j in 0..p {
                    v[(i, m + j)] = -ws[(i, j)];
                    v[(m + j, i)] = -ws[(i, j)];
                }
            }
            for i in 0..p {
                for j in 0..p {
                    v[(m + i, m + j)] = s_inv[(i, j)];
                }
            }
        }
        (&v + v.transpose()) * 0.5
    }
}
