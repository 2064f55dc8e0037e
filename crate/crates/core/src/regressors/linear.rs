//! Ordinary least squares with an intercept.
//!
//! The intercept is handled by centering, so the coefficient vector is the
//! minimum-norm least-squares solution on the centered design. Rank is read
//! off the singular values with tolerance `eps * max(n, p) * sigma_max`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{canonical_row_order, check_columns, check_training, RegressError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Numerical rank of the centered design.
    pub rank: usize,
}

impl LinearModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, RegressError> {
        check_columns(x, self.coefficients.len())?;
        Ok(x.row_iter()
            .map(|row| {
                row.iter()
                    .zip(&self.coefficients)
                    .fold(self.intercept, |acc, (v, b)| acc + v * b)
            })
            .collect())
    }
}

pub fn fit_linear(x: &DMatrix<f64>, y: &[f64]) -> Result<LinearModel, RegressError> {
    check_training(x, y)?;
    let order = canonical_row_order(x, y);
    let x = &x.select_rows(&order);
    let y: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let (n, p) = x.shape();
    let x_mean: Vec<f64> = x.column_iter().map(|c| c.mean()).collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;

    let mut centered = x.clone();
    for (j, mean) in x_mean.iter().enumerate() {
        centered.column_mut(j).add_scalar_mut(-mean);
    }
    let target = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let (coefficients, rank) = min_norm_solve(centered, &target);
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    debug_assert_eq!(coefficients.len(), p);
    Ok(LinearModel {
        coefficients,
        intercept,
        rank,
    })
}

/// Minimum-norm solution of `a * beta ~= b` via the singular value
/// decomposition, plus the numerical rank.
pub(crate) fn min_norm_solve(a: DMatrix<f64>, b: &DVector<f64>) -> (Vec<f64>, usize) {
    let (n, p) = a.shape();
    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let tol = f64::EPSILON * n.max(p) as f64 * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank == 0 {
        return (vec![0.0; p], 0);
    }
    let u = svd.u.as_ref().expect("u computed");
    let v_t = svd.v_t.as_ref().expect("v_t computed");
    let mut beta = DVector::zeros(p);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let weight = u.column(k).dot(b) / s;
            beta.axpy(weight, &v_t.row(k).transpose(), 1.0);
        }
    }
    (beta.iter().copied().collect(), rank)
}
