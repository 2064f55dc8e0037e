//! From a derived feature table to a numeric model matrix.
//!
//! The stages are, in order: drop rows with missing cells, keep the model
//! feature columns, label/one-hot encode the categoricals, z-score scale,
//! and split into train and test partitions.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::WeatherCategory;
use crate::features::{HomeAway, OutNotOut, WinLoss};

pub const LABEL_COLUMN: &str = "impact";

pub mod columns {
    pub const OUT_NOT_OUT: &str = "Out/NotOut";
    pub const OPPOSITION_INDEX: &str = "Opposition Index";
    pub const HOME_AWAY: &str = "Home/Away";
    pub const DOT_BALL: &str = "Dot Ball";
    pub const OTHERS: &str = "Others";
    pub const WIN_LOSS: &str = "Win/Loss";
    pub const TEAM_RUN: &str = "Team Run";
    pub const IN_AT_POSITION: &str = "In At Position";
    pub const PITCH_INDEX: &str = "Pitch Index";
    pub const WEATHER: &str = "Weather";
}

/// Model features kept by [`select_features`], in output column order.
pub const MODEL_FEATURES: [&str; 10] = [
    columns::DOT_BALL,
    columns::OPPOSITION_INDEX,
    columns::OUT_NOT_OUT,
    columns::OTHERS,
    columns::TEAM_RUN,
    columns::IN_AT_POSITION,
    columns::PITCH_INDEX,
    columns::HOME_AWAY,
    columns::WIN_LOSS,
    columns::WEATHER,
];

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("every row had a missing value")]
    AllRowsDropped,
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("unknown category {value:?} in column {column:?}")]
    UnknownCategory { column: String, value: String },
    #[error("matrix has no rows")]
    EmptyMatrix,
    #[error("too few rows to split: need at least 4, got {0}")]
    TooFewRows(usize),
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    InvalidTestFraction(f64),
    #[error("table must have exactly one label column, found {0}")]
    LabelCount(usize),
    #[error("row {row} has {found} cells, schema has {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("column {column:?} row {row}: expected a number, found {value:?}")]
    NotNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("scaler expects {expected} columns, matrix has {found}")]
    ShapeMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnSpec {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    /// Parses a raw CSV field; empty or `NA`-style markers become missing.
    pub fn parse(raw: &str, kind: ColumnKind) -> Cell {
        let t = raw.trim();
        if t.is_empty() || matches!(t, "NA" | "N/A" | "NaN" | "-") {
            return Cell::Missing;
        }
        match kind {
            ColumnKind::Categorical => Cell::Text(t.to_string()),
            ColumnKind::Numeric | ColumnKind::Label => match t.parse::<f64>() {
                Ok(v) => Cell::Num(v),
                Err(_) => Cell::Text(t.to_string()),
            },
        }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

/// Rectangular table with a typed schema and one identifier per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    columns: Vec<ColumnSpec>,
    rows: Vec<Vec<Cell>>,
    row_ids: Vec<String>,
}

impl FeatureTable {
    pub fn new(
        columns: Vec<ColumnSpec>,
        rows: Vec<Vec<Cell>>,
        row_ids: Vec<String>,
    ) -> Result<Self, PreprocessError> {
        let labels = columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Label)
            .count();
        if labels != 1 {
            return Err(PreprocessError::LabelCount(labels));
        }
        for (row, cells) in rows.iter().enumerate() {
            if cells.len() != columns.len() {
                return Err(PreprocessError::RaggedRow {
                    row,
                    found: cells.len(),
                    expected: columns.len(),
                });
            }
        }
        assert_eq!(rows.len(), row_ids.len(), "one identifier per row");
        Ok(FeatureTable {
            columns,
            rows,
            row_ids,
        })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Label)
            .expect("validated in constructor")
    }

    /// Numeric values of one column; fails on text or missing cells.
    pub fn numeric_column(&self, index: usize) -> Result<Vec<f64>, PreprocessError> {
        self.rows
            .iter()
            .enumerate()
            .map(|(row, cells)| match &cells[index] {
                Cell::Num(v) => Ok(*v),
                other => Err(PreprocessError::NotNumeric {
                    column: self.columns[index].name.clone(),
                    row,
                    value: other.render(),
                }),
            })
            .collect()
    }
}

/// Rows with no missing cell, plus how many rows were removed.
pub fn drop_incomplete(table: &FeatureTable) -> Result<(FeatureTable, usize), PreprocessError> {
    let (rows, row_ids): (Vec<_>, Vec<_>) = table
        .rows
        .iter()
        .zip(&table.row_ids)
        .filter(|(cells, _)| !cells.iter().any(Cell::is_missing))
        .map(|(cells, id)| (cells.clone(), id.clone()))
        .unzip();
    if rows.is_empty() {
        return Err(PreprocessError::AllRowsDropped);
    }
    let dropped = table.n_rows() - rows.len();
    Ok((
        FeatureTable {
            columns: table.columns.clone(),
            rows,
            row_ids,
        },
        dropped,
    ))
}

/// Keeps the [`MODEL_FEATURES`] columns and the `impact` label.
pub fn select_features(table: &FeatureTable) -> Result<FeatureTable, PreprocessError> {
    select_columns(table, &MODEL_FEATURES)
}

pub fn select_columns(
    table: &FeatureTable,
    features: &[&str],
) -> Result<FeatureTable, PreprocessError> {
    let mut picks = Vec::with_capacity(features.len() + 1);
    for name in features
        .iter()
        .copied()
        .chain(std::iter::once(LABEL_COLUMN))
    {
        let index = table
            .column_index(name)
            .ok_or_else(|| PreprocessError::MissingColumn(name.to_string()))?;
        picks.push(index);
    }
    let mut columns: Vec<ColumnSpec> = picks.iter().map(|&i| table.columns[i].clone()).collect();
    for column in columns.iter_mut() {
        column.kind = match column.name.as_str() {
            LABEL_COLUMN => ColumnKind::Label,
            columns::OUT_NOT_OUT | columns::HOME_AWAY | columns::WIN_LOSS | columns::WEATHER => {
                ColumnKind::Categorical
            }
            _ => ColumnKind::Numeric,
        };
    }
    let rows = table
        .rows
        .iter()
        .map(|cells| picks.iter().map(|&i| cells[i].clone()).collect())
        .collect();
    FeatureTable::new(columns, rows, table.row_ids.clone())
}

struct OneHotGroup {
    column: &'static str,
    categories: Vec<&'static str>,
}

fn one_hot_groups() -> [OneHotGroup; 3] {
    [
        OneHotGroup {
            column: columns::HOME_AWAY,
            categories: HomeAway::ALL.iter().map(|v| v.as_str()).collect(),
        },
        OneHotGroup {
            column: columns::WIN_LOSS,
            categories: WinLoss::ALL.iter().map(|v| v.as_str()).collect(),
        },
        OneHotGroup {
            column: columns::WEATHER,
            categories: WeatherCategory::ALL.iter().map(|v| v.as_str()).collect(),
        },
    ]
}

/// Names of the encoded columns for the default feature selection.
pub fn encoded_feature_names() -> Vec<String> {
    let groups = one_hot_groups();
    let mut names = Vec::new();
    for name in MODEL_FEATURES {
        match groups.iter().find(|g| g.column == name) {
            Some(group) => names.extend(group.categories.iter().map(|c| c.to_string())),
            None => names.push(name.to_string()),
        }
    }
    names
}

fn category_matches(label: &str, value: &str) -> bool {
    let squash = |s: &str| {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_lowercase()
    };
    squash(label) == squash(value)
}

/// Makes every column numeric: `Out/NotOut` becomes 0/1, the remaining
/// categorical columns expand into alphabetically ordered one-hot columns.
pub fn encode(table: &FeatureTable) -> Result<FeatureTable, PreprocessError> {
    let groups = one_hot_groups();
    let mut columns = Vec::new();
    // Each output column is built by a closure over the input row.
    type Encoder<'a> = Box<dyn Fn(&[Cell], usize) -> Result<Cell, PreprocessError> + 'a>;
    let mut encoders: Vec<Encoder> = Vec::new();

    for (index, spec) in table.columns.iter().enumerate() {
        let name = spec.name.clone();
        if spec.name == columns::OUT_NOT_OUT {
            columns.push(ColumnSpec::new(&spec.name, ColumnKind::Numeric));
            encoders.push(Box::new(move |cells, _| {
                let value = cells[index].render();
                match value.parse::<OutNotOut>() {
                    Ok(OutNotOut::Out) => Ok(Cell::Num(0.0)),
                    Ok(OutNotOut::NotOut) => Ok(Cell::Num(1.0)),
                    Err(_) => Err(PreprocessError::UnknownCategory {
                        column: name.clone(),
                        value,
                    }),
                }
            }));
        } else if let Some(group) = groups.iter().find(|g| g.column == spec.name) {
            for (slot, category) in group.categories.iter().enumerate() {
                columns.push(ColumnSpec::new(*category, ColumnKind::Numeric));
                let name = name.clone();
                let categories = group.categories.clone();
                encoders.push(Box::new(move |cells, _| {
                    let value = cells[index].render();
                    let hit = categories
                        .iter()
                        .position(|c| category_matches(c, &value))
                        .ok_or_else(|| PreprocessError::UnknownCategory {
                            column: name.clone(),
                            value,
                        })?;
                    Ok(Cell::Num(if hit == slot { 1.0 } else { 0.0 }))
                }));
            }
        } else {
            columns.push(spec.clone());
            if spec.kind == ColumnKind::Categorical {
                return Err(PreprocessError::UnknownCategory {
                    column: spec.name.clone(),
                    value: "<no encoding rule for column>".into(),
                });
            }
            encoders.push(Box::new(move |cells, row| match &cells[index] {
                Cell::Num(v) => Ok(Cell::Num(*v)),
                other => Err(PreprocessError::NotNumeric {
                    column: name.clone(),
                    row,
                    value: other.render(),
                }),
            }));
        }
    }

    let rows = table
        .rows
        .iter()
        .enumerate()
        .map(|(row, cells)| {
            encoders
                .iter()
                .map(|enc| enc(cells, row))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    FeatureTable::new(columns, rows, table.row_ids.clone())
}

/// Numeric design matrix, label vector and row identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub row_ids: Vec<String>,
}

impl Dataset {
    /// Converts an all-numeric table (e.g. the output of [`encode`]).
    pub fn from_table(table: &FeatureTable) -> Result<Self, PreprocessError> {
        let label = table.label_index();
        let feature_cols: Vec<usize> = (0..table.columns.len()).filter(|&i| i != label).collect();
        let n = table.n_rows();
        let mut x = DMatrix::zeros(n, feature_cols.len());
        for (j, &col) in feature_cols.iter().enumerate() {
            for (i, v) in table.numeric_column(col)?.into_iter().enumerate() {
                x[(i, j)] = v;
            }
        }
        Ok(Dataset {
            feature_names: feature_cols
                .iter()
                .map(|&i| table.columns[i].name.clone())
                .collect(),
            x,
            y: table.numeric_column(label)?,
            row_ids: table.row_ids.clone(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }
}

/// z-score parameters of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl ColumnScale {
    pub fn fit(values: &[f64]) -> Result<Self, PreprocessError> {
        if values.is_empty() {
            return Err(PreprocessError::EmptyMatrix);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(ColumnScale {
            mean,
            std: var.sqrt(),
        })
    }

    /// Columns without spread pass through unscaled.
    pub fn is_constant(&self) -> bool {
        self.std == 0.0
    }

    pub fn transform(&self, v: f64) -> f64 {
        if self.is_constant() {
            v
        } else {
            (v - self.mean) / self.std
        }
    }

    pub fn inverse(&self, v: f64) -> f64 {
        if self.is_constant() {
            v
        } else {
            v * self.std + self.mean
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledColumn {
    pub name: String,
    #[serde(flatten)]
    pub scale: ColumnScale,
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub columns: Vec<ScaledColumn>,
}

impl ScalerParams {
    pub fn constant_columns(&self) -> impl Iterator<Item = &str> {
        self.columns
            .iter()
            .filter(|c| c.constant)
            .map(|c| c.name.as_str())
    }
}

pub fn fit_scaler(
    matrix: &DMatrix<f64>,
    names: &[String],
) -> Result<ScalerParams, PreprocessError> {
    if matrix.nrows() == 0 {
        return Err(PreprocessError::EmptyMatrix);
    }
    if names.len() != matrix.ncols() {
        return Err(PreprocessError::ShapeMismatch {
            expected: names.len(),
            found: matrix.ncols(),
        });
    }
    let columns = matrix
        .column_iter()
        .zip(names)
        .map(|(col, name)| {
            let values: Vec<f64> = col.iter().copied().collect();
            let scale = ColumnScale::fit(&values)?;
            if scale.is_constant() {
                log::warn!("column {name:?} is constant; left unscaled");
            }
            Ok(ScaledColumn {
                name: name.clone(),
                scale,
                constant: scale.is_constant(),
            })
        })
        .collect::<Result<_, PreprocessError>>()?;
    Ok(ScalerParams { columns })
}

pub fn apply_scaler(
    matrix: &DMatrix<f64>,
    params: &ScalerParams,
) -> Result<DMatrix<f64>, PreprocessError> {
    map_columns(matrix, params, ColumnScale::transform)
}

pub fn invert_scaler(
    matrix: &DMatrix<f64>,
    params: &ScalerParams,
) -> Result<DMatrix<f64>, PreprocessError> {
    map_columns(matrix, params, ColumnScale::inverse)
}

fn map_columns(
    matrix: &DMatrix<f64>,
    params: &ScalerParams,
    f: fn(&ColumnScale, f64) -> f64,
) -> Result<DMatrix<f64>, PreprocessError> {
    if params.columns.len() != matrix.ncols() {
        return Err(PreprocessError::ShapeMismatch {
            expected: params.columns.len(),
            found: matrix.ncols(),
        });
    }
    let mut out = matrix.clone();
    for (j, column) in params.columns.iter().enumerate() {
        for v in out.column_mut(j).iter_mut() {
            *v = f(&column.scale, *v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub test_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            seed: 42,
            test_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded Fisher-Yates permutation of `0..n`, drawing from ChaCha8.
///
/// The seed-to-permutation map is part of the output contract: changing the
/// generator or the draw order changes every split manifest.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    order
}

/// Splits `n` rows: the first `ceil(test_fraction * n)` permuted rows are the
/// test set. At least one row always stays in training.
pub fn train_test_split(n: usize, spec: &SplitSpec) -> Result<SplitIndices, PreprocessError> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(PreprocessError::InvalidTestFraction(spec.test_fraction));
    }
    if n < 4 {
        return Err(PreprocessError::TooFewRows(n));
    }
    // The epsilon keeps products like 0.3 * 10 from rounding up a whole row.
    let n_test = ((spec.test_fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n - 1);
    let order = permutation(n, spec.seed);
    Ok(SplitIndices {
        test: order[..n_test].to_vec(),
        train: order[n_test..].to_vec(),
    })
}
