//! Epsilon-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved in the doubled-variable form
//!
//! ```text
//! min  1/2 a'Qa + p'a   s.t.  s'a = 0,  0 <= a_t <= C,  t = 0..2n
//! ```
//!
//! where the first `n` variables carry sign `+1` and linear term
//! `epsilon - y_i`, the second `n` carry sign `-1` and `epsilon + y_i`, and
//! `Q_tu = s_t s_u k(x_t, x_u)`. Pairs are picked by maximal violation with
//! second-order selection of the partner and updated analytically.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_columns, check_training, RegressError};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; `None` uses `1 / (n_features * var(X))`.
    pub gamma: Option<f64>,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    /// Cap on pairwise updates.
    pub max_passes: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            gamma: None,
            tolerance: 1e-3,
            max_passes: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i - alpha_i*` for each stored support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub passes: usize,
    pub converged: bool,
    /// Maximal KKT violation at exit.
    pub final_gap: f64,
}

pub fn rbf(gamma: f64, u: &[f64], v: &[f64]) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// `1 / (p * var)` over all entries of `x`, or 1 when `x` has no spread.
pub fn default_gamma(x: &DMatrix<f64>) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

impl SvrModel {
    pub fn n_features(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, RegressError> {
        if let Some(p) = self.n_features() {
            check_columns(x, p)?;
        }
        Ok(x.row_iter()
            .map(|row| {
                let row: Vec<f64> = row.iter().copied().collect();
                self.support_vectors
                    .iter()
                    .zip(&self.dual_coefficients)
                    .map(|(sv, b)| b * rbf(self.gamma, sv, &row))
                    .sum::<f64>()
                    + self.bias
            })
            .collect())
    }
}

pub fn fit_svr(x: &DMatrix<f64>, y: &[f64], params: &SvrParams) -> Result<SvrModel, RegressError> {
    fit_svr_traced(x, y, params).map(|(model, _)| model)
}

/// Fits and also returns the dual objective (to be maximized) after every
/// pairwise update.
pub fn fit_svr_traced(
    x: &DMatrix<f64>,
    y: &[f64],
    params: &SvrParams,
) -> Result<(SvrModel, Vec<f64>), RegressError> {
    check_training(x, y)?;
    if x.nrows() < 2 {
        return Err(RegressError::InvalidParameter(
            "SVR needs at least 2 rows".into(),
        ));
    }
    let positive = |v: f64| v > 0.0;
    if !positive(params.c)
        || !(positive(params.epsilon) || params.epsilon == 0.0)
        || !positive(params.tolerance)
    {
        return Err(RegressError::InvalidParameter(format!(
            "need C > 0, epsilon >= 0, tolerance > 0 (got {}, {}, {})",
            params.c, params.epsilon, params.tolerance
        )));
    }
    let gamma = params.gamma.unwrap_or_else(|| default_gamma(x));
    if !positive(gamma) || !gamma.is_finite() {
        return Err(RegressError::InvalidParameter(format!(
            "gamma must be > 0, got {gamma}"
        )));
    }

    let n = x.nrows();
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let kernel = DMatrix::from_fn(n, n, |i, j| rbf(gamma, &rows[i], &rows[j]));

    let mut solver = Smo::new(&kernel, y, params.c, params.epsilon);
    let mut trace = Vec::new();
    let mut passes = 0;
    let mut gap = solver.gap();
    let converged = loop {
        let Some((i, j)) = solver.select(params.tolerance) else {
            break true;
        };
        if passes >= params.max_passes {
            break false;
        }
        solver.update(i, j);
        passes += 1;
        trace.push(-solver.objective());
        gap = solver.gap();
    };
    if converged {
        gap = solver.gap();
    } else {
        log::warn!(
            "SVR did not reach KKT tolerance {} within {} passes (gap {gap:.3e}); using last iterate",
            params.tolerance,
            params.max_passes
        );
    }

    let bias = -solver.rho();
    let (support_vectors, dual_coefficients) = (0..n)
        .filter_map(|i| {
            let beta = solver.alpha[i] - solver.alpha[i + n];
            (beta != 0.0).then(|| (rows[i].clone(), beta))
        })
        .unzip();
    Ok((
        SvrModel {
            c: params.c,
            epsilon: params.epsilon,
            gamma,
            support_vectors,
            dual_coefficients,
            bias,
            passes,
            converged,
            final_gap: gap,
        },
        trace,
    ))
}

struct Smo<'a> {
    kernel: &'a DMatrix<f64>,
    n: usize,
    c: f64,
    linear: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
}

impl<'a> Smo<'a> {
    fn new(kernel: &'a DMatrix<f64>, y: &[f64], c: f64, epsilon: f64) -> Self {
        let n = y.len();
        let linear: Vec<f64> = y
            .iter()
            .map(|v| epsilon - v)
            .chain(y.iter().map(|v| epsilon + v))
            .collect();
        Smo {
            kernel,
            n,
            c,
            grad: linear.clone(),
            linear,
            alpha: vec![0.0; 2 * n],
        }
    }

    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    fn q(&self, t: usize, u: usize) -> f64 {
        self.sign(t) * self.sign(u) * self.kernel[(t % self.n, u % self.n)]
    }

    fn at_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.c
    }

    fn at_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    /// Can move in the direction that increases `s_t * a_t`.
    fn in_up_set(&self, t: usize) -> bool {
        if self.sign(t) > 0.0 {
            !self.at_upper(t)
        } else {
            !self.at_lower(t)
        }
    }

    fn in_low_set(&self, t: usize) -> bool {
        if self.sign(t) > 0.0 {
            !self.at_lower(t)
        } else {
            !self.at_upper(t)
        }
    }

    fn gap(&self) -> f64 {
        let l = 2 * self.n;
        let up = (0..l)
            .filter(|&t| self.in_up_set(t))
            .map(|t| -self.sign(t) * self.grad[t])
            .fold(f64::NEG_INFINITY, f64::max);
        let low = (0..l)
            .filter(|&t| self.in_low_set(t))
            .map(|t| -self.sign(t) * self.grad[t])
            .fold(f64::INFINITY, f64::min);
        (up - low).max(0.0)
    }

    fn select(&self, tolerance: f64) -> Option<(usize, usize)> {
        let l = 2 * self.n;
        let mut g_max = f64::NEG_INFINITY;
        let mut i = None;
        for t in 0..l {
            if self.in_up_set(t) {
                let v = -self.sign(t) * self.grad[t];
                if v >= g_max {
                    g_max = v;
                    i = Some(t);
                }
            }
        }
        let i = i?;
        let mut g_max2 = f64::NEG_INFINITY;
        let mut best = None;
        let mut best_obj = f64::INFINITY;
        let qii = self.q(i, i);
        for t in 0..l {
            if !self.in_low_set(t) {
                continue;
            }
            let v = self.sign(t) * self.grad[t];
            g_max2 = g_max2.max(v);
            let grad_diff = g_max + v;
            if grad_diff > 0.0 {
                let mut quad =
                    qii + self.q(t, t) - 2.0 * self.sign(i) * self.sign(t) * self.q(i, t);
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= best_obj {
                    best_obj = obj;
                    best = Some(t);
                }
            }
        }
        if g_max + g_max2 < tolerance {
            return None;
        }
        best.map(|j| (i, j))
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (qii, qjj, qij) = (self.q(i, i), self.q(j, j), self.q(i, j));
        let (mut ai, mut aj) = (old_i, old_j);
        if self.sign(i) != self.sign(j) {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..2 * self.n {
            self.grad[t] += self.q(t, i) * di + self.q(t, j) * dj;
        }
    }

    /// `1/2 a'Qa + p'a`, using `grad = Qa + p`.
    fn objective(&self) -> f64 {
        0.5 * self
            .alpha
            .iter()
            .zip(self.grad.iter().zip(&self.linear))
            .map(|(a, (g, p))| a * (g + p))
            .sum::<f64>()
    }

    fn rho(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum_free) = (0usize, 0.0);
        for t in 0..2 * self.n {
            let yg = self.sign(t) * self.grad[t];
            let positive = self.sign(t) > 0.0;
            if self.at_upper(t) {
                if positive {
                    lb = lb.max(yg);
                } else {
                    ub = ub.min(yg);
                }
            } else if self.at_lower(t) {
                if positive {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free += yg;
            }
        }
        if free > 0 {
            sum_free / free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}
