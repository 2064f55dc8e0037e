//! Polynomial regression: a full monomial basis fed to least squares.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linear::{fit_linear, LinearModel};
use super::{check_columns, RegressError};

pub const DEFAULT_MAX_TERMS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolyParams {
    pub degree: u32,
    pub max_terms: usize,
}

impl Default for PolyParams {
    fn default() -> Self {
        PolyParams {
            degree: 4,
            max_terms: DEFAULT_MAX_TERMS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyModel {
    pub degree: u32,
    pub n_features: usize,
    /// Each term is the non-decreasing list of feature indices multiplied
    /// together; the empty list is the constant term.
    pub terms: Vec<Vec<usize>>,
    pub core: LinearModel,
}

impl PolyModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, RegressError> {
        check_columns(x, self.n_features)?;
        self.core.predict(&evaluate_terms(x, &self.terms))
    }

    /// Exponent multi-index of every term.
    pub fn exponents(&self) -> Vec<Vec<u32>> {
        self.terms
            .iter()
            .map(|term| {
                let mut e = vec![0; self.n_features];
                for &f in term {
                    e[f] += 1;
                }
                e
            })
            .collect()
    }
}

/// `C(p + d, d)`, the number of monomials of total degree at most `d` in `p`
/// variables. `None` on overflow.
pub fn term_count(p: usize, d: u32) -> Option<usize> {
    let d = d as u128;
    let mut acc: u128 = 1;
    for k in 1..=d {
        acc = acc.checked_mul(p as u128 + k)? / k;
    }
    usize::try_from(acc).ok()
}

/// Monomials in graded lexicographic order: by total degree, then
/// lexicographically on the sorted factor list.
pub fn monomial_terms(p: usize, degree: u32) -> Vec<Vec<usize>> {
    fn extend(
        p: usize,
        start: usize,
        remaining: u32,
        prefix: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if remaining == 0 {
            out.push(prefix.clone());
            return;
        }
        for f in start..p {
            prefix.push(f);
            extend(p, f, remaining - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        extend(p, 0, d, &mut Vec::with_capacity(d as usize), &mut out);
    }
    out
}

fn evaluate_terms(x: &DMatrix<f64>, terms: &[Vec<usize>]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), terms.len(), |i, t| {
        terms[t].iter().fold(1.0, |acc, &f| acc * x[(i, f)])
    })
}

pub fn expand_polynomial(
    x: &DMatrix<f64>,
    degree: u32,
    max_terms: usize,
) -> Result<(DMatrix<f64>, Vec<Vec<usize>>), RegressError> {
    if degree == 0 {
        return Err(RegressError::InvalidParameter(
            "polynomial degree must be >= 1".into(),
        ));
    }
    let terms = term_count(x.ncols(), degree).unwrap_or(usize::MAX);
    if terms > max_terms {
        return Err(RegressError::ExpansionTooLarge {
            terms,
            cap: max_terms,
        });
    }
    let terms = monomial_terms(x.ncols(), degree);
    Ok((evaluate_terms(x, &terms), terms))
}

pub fn fit_poly(
    x: &DMatrix<f64>,
    y: &[f64],
    params: &PolyParams,
) -> Result<PolyModel, RegressError> {
    super::check_training(x, y)?;
    let (expanded, terms) = expand_polynomial(x, params.degree, params.max_terms)?;
    Ok(PolyModel {
        degree: params.degree,
        n_features: x.ncols(),
        terms,
        core: fit_linear(&expanded, y)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_feature_quadratic_layout() {
        let x = DMatrix::from_row_slice(1, 2, &[2.0, 3.0]);
        let (e, terms) = expand_polynomial(&x, 2, DEFAULT_MAX_TERMS).unwrap();
        assert_eq!(
            terms,
            vec![vec![], vec![0], vec![1], vec![0, 0], vec![0, 1], vec![1, 1]]
        );
        assert_eq!(
            e.row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]
        );
    }

    #[test]
    fn term_counts() {
        assert_eq!(term_count(18, 4), Some(7315));
        assert_eq!(monomial_terms(18, 4).len(), 7315);
        assert_eq!(term_count(5, 1), Some(6));
        let x = DMatrix::zeros(2, 40);
        assert_eq!(
            expand_polynomial(&x, 4, DEFAULT_MAX_TERMS),
            Err(RegressError::ExpansionTooLarge {
                terms: 135_751,
                cap: DEFAULT_MAX_TERMS
            })
        );
    }

    #[test]
    fn recovers_square() {
        let grid = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let x = DMatrix::from_column_slice(5, 1, &grid);
        let y: Vec<f64> = grid.iter().map(|v| v * v).collect();
        let m = fit_poly(
            &x,
            &y,
            &PolyParams {
                degree: 2,
                ..Default::default()
            },
        )
        .unwrap();
        for (p, t) in m.predict(&x).unwrap().iter().zip(&y) {
            assert_abs_diff_eq!(p, t, epsilon = 1e-8);
        }
        assert_eq!(m.exponents(), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn degree_one_is_linear() {
        let x = DMatrix::from_fn(9, 3, |i, j| {
            ((i * 5 + j * 7) % 9) as f64 - 4.0 + j as f64 * 0.1
        });
        let y: Vec<f64> = (0..9).map(|i| (i as f64).sqrt() * 2.0 - 1.0).collect();
        let poly = fit_poly(
            &x,
            &y,
            &PolyParams {
                degree: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let lin = fit_linear(&x, &y).unwrap();
        for (a, b) in poly
            .predict(&x)
            .unwrap()
            .iter()
            .zip(lin.predict(&x).unwrap())
        {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_degree_rejected() {
        assert!(matches!(
            expand_polynomial(&DMatrix::zeros(1, 1), 0, 10),
            Err(RegressError::InvalidParameter(_))
        ));
    }
}
