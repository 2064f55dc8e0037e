//! Scoring, feature correlation and the per-player accuracy report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::ColumnScale;
use crate::regressors::ModelKind;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {actual} actual vs {predicted} predicted")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("series is empty")]
    Empty,
    #[error("actual values are constant; R^2 is undefined")]
    ConstantActual,
    #[error("too few rows: need at least 2, got {0}")]
    TooFewRows(usize),
    #[error("no results to report")]
    EmptyResults,
}

fn check_pair(actual: &[f64], predicted: &[f64]) -> Result<(), EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    Ok(())
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r2_score(actual: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    check_pair(actual, predicted)?;
    if actual.is_empty() {
        return Err(EvalError::Empty);
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(EvalError::ConstantActual);
    }
    let ss_res: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    /// Row-major, `labels.len()` squared entries.
    pub values: Vec<Vec<f64>>,
    /// Columns with zero variance; their off-diagonal entries are 0.
    pub constant_columns: Vec<String>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.values[i][j])
    }
}

/// Pairwise Pearson coefficients of equally long columns.
pub fn pearson_matrix(
    labels: &[String],
    columns: &[Vec<f64>],
) -> Result<CorrelationMatrix, EvalError> {
    assert_eq!(labels.len(), columns.len(), "one label per column");
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(EvalError::TooFewRows(n));
    }
    for c in columns {
        check_pair(&columns[0], c)?;
    }
    // Centered columns and their norms.
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / n as f64;
            c.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let k = columns.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let r = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else if i == j {
                1.0
            } else {
                let dot: f64 = centered[i]
                    .iter()
                    .zip(&centered[j])
                    .map(|(a, b)| a * b)
                    .sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    let constant_columns = labels
        .iter()
        .zip(&norms)
        .filter(|(_, n)| **n == 0.0)
        .map(|(l, _)| l.clone())
        .collect();
    Ok(CorrelationMatrix {
        labels: labels.to_vec(),
        values,
        constant_columns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub index: usize,
    pub actual: f64,
    pub predicted: f64,
}

/// Actual-vs-predicted pairs in test order, mapped back to label units when
/// the label was scaled.
pub fn comparison_series(
    actual: &[f64],
    predicted: &[f64],
    label_scale: Option<&ColumnScale>,
) -> Result<Vec<SeriesPoint>, EvalError> {
    check_pair(actual, predicted)?;
    let unscale = |v: f64| label_scale.map_or(v, |s| s.inverse(v));
    Ok(actual
        .iter()
        .zip(predicted)
        .enumerate()
        .map(|(index, (a, p))| SeriesPoint {
            index,
            actual: unscale(*a),
            predicted: unscale(*p),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCell {
    pub player: String,
    pub model: ModelKind,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: ModelKind,
    /// R^2 per player, keyed by player.
    pub r2: BTreeMap<String, f64>,
    pub mean_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Players in first-seen order.
    pub players: Vec<String>,
    /// Sorted by descending mean R^2.
    pub rows: Vec<ReportRow>,
}

pub fn accuracy_report(cells: &[ScoreCell]) -> Result<EvaluationReport, EvalError> {
    if cells.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    let mut players: Vec<String> = Vec::new();
    let mut by_model: Vec<(ModelKind, BTreeMap<String, f64>)> = Vec::new();
    for cell in cells {
        if !players.contains(&cell.player) {
            players.push(cell.player.clone());
        }
        match by_model.iter_mut().find(|(m, _)| *m == cell.model) {
            Some((_, scores)) => {
                scores.insert(cell.player.clone(), cell.r2);
            }
            None => by_model.push((cell.model, BTreeMap::from([(cell.player.clone(), cell.r2)]))),
        }
    }
    let mut rows: Vec<ReportRow> = by_model
        .into_iter()
        .map(|(model, r2)| {
            let mean_r2 = r2.values().sum::<f64>() / r2.len() as f64;
            ReportRow { model, r2, mean_r2 }
        })
        .collect();
    rows.sort_by(|a, b| b.mean_r2.total_cmp(&a.mean_r2));
    Ok(EvaluationReport { players, rows })
}

impl EvaluationReport {
    /// Table layout: one row per model, R^2 as percentages with 2 decimals.
    pub fn to_table(&self) -> Vec<Vec<String>> {
        let mut header = vec!["Regression Model".to_string()];
        header.extend(self.players.iter().map(|p| format!("{p} R2 (%)")));
        header.push("Mean R2 (%)".into());
        let mut table = vec![header];
        for row in &self.rows {
            let mut line = vec![row.model.display_name().to_string()];
            line.extend(self.players.iter().map(|p| {
                row.r2
                    .get(p)
                    .map_or(String::new(), |v| format!("{:.2}", v * 100.0))
            }));
            line.push(format!("{:.2}", row.mean_r2 * 100.0));
            table.push(line);
        }
        table
    }

    pub fn row(&self, model: ModelKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model == model)
    }
}
