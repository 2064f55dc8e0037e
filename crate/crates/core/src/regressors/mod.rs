//! Five regression models behind one fit/predict contract.
//!
//! Every model is fitted from a dense `n x p` matrix and a target vector and
//! is immutable afterwards. Models serialize to JSON through
//! [`TrainedModel`], tagged with a format version.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod forest;
pub mod linear;
pub mod poly;
pub mod svr;
pub mod tree;

pub use forest::{fit_forest, ForestModel, ForestParams};
pub use linear::{fit_linear, LinearModel};
pub use poly::{expand_polynomial, fit_poly, term_count, PolyModel, PolyParams};
pub use svr::{fit_svr, SvrModel, SvrParams};
pub use tree::{fit_tree, TreeModel, TreeParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum RegressError {
    #[error("training matrix is empty")]
    EmptyMatrix,
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("expected {expected} columns, got {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("{rows} rows but {targets} targets")]
    TargetLength { rows: usize, targets: usize },
    #[error("polynomial expansion needs {terms} terms, cap is {cap}")]
    ExpansionTooLarge { terms: usize, cap: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported model format version {0}")]
    FormatVersion(u32),
    #[error("model file: {0}")]
    Serde(String),
}

pub(crate) fn check_training(x: &DMatrix<f64>, y: &[f64]) -> Result<(), RegressError> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(RegressError::EmptyMatrix);
    }
    if x.nrows() != y.len() {
        return Err(RegressError::TargetLength {
            rows: x.nrows(),
            targets: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(RegressError::NonFiniteInput);
    }
    Ok(())
}

/// Row indices sorted lexicographically by features, then target, using the
/// IEEE total order. Fitting in this order makes a model independent of how
/// the caller happened to order its rows.
pub(crate) fn canonical_row_order(x: &DMatrix<f64>, y: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b).iter())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| y[a].total_cmp(&y[b]))
    });
    order
}

pub(crate) fn check_columns(x: &DMatrix<f64>, expected: usize) -> Result<(), RegressError> {
    if x.ncols() != expected {
        return Err(RegressError::ShapeMismatch {
            expected,
            found: x.ncols(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    MultipleLinear,
    RandomForest,
    SupportVector,
    Polynomial,
    DecisionTree,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::MultipleLinear,
        ModelKind::RandomForest,
        ModelKind::SupportVector,
        ModelKind::Polynomial,
        ModelKind::DecisionTree,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::MultipleLinear => "Multiple Linear",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::SupportVector => "Support Vector",
            ModelKind::Polynomial => "Polynomial",
            ModelKind::DecisionTree => "Decision Tree",
        }
    }

    /// File-name friendly identifier.
    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::MultipleLinear => "linear",
            ModelKind::RandomForest => "forest",
            ModelKind::SupportVector => "svr",
            ModelKind::Polynomial => "poly",
            ModelKind::DecisionTree => "tree",
        }
    }
}

/// Hyperparameters for the whole suite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteParams {
    pub poly: PolyParams,
    pub svr: SvrParams,
    pub tree: TreeParams,
    pub forest: ForestParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model")]
pub enum TrainedModel {
    MultipleLinear(LinearModel),
    Polynomial(PolyModel),
    SupportVector(SvrModel),
    DecisionTree(TreeModel),
    RandomForest(ForestModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(flatten)]
    model: TrainedModel,
}

impl TrainedModel {
    /// Fits the model of `kind`. `seed` only affects the forest.
    pub fn fit(
        kind: ModelKind,
        x: &DMatrix<f64>,
        y: &[f64],
        params: &SuiteParams,
        seed: u64,
    ) -> Result<Self, RegressError> {
        Ok(match kind {
            ModelKind::MultipleLinear => TrainedModel::MultipleLinear(fit_linear(x, y)?),
            ModelKind::Polynomial => TrainedModel::Polynomial(fit_poly(x, y, &params.poly)?),
            ModelKind::SupportVector => TrainedModel::SupportVector(fit_svr(x, y, &params.svr)?),
            ModelKind::DecisionTree => TrainedModel::DecisionTree(fit_tree(x, y, &params.tree)?),
            ModelKind::RandomForest => {
                let forest = ForestParams {
                    master_seed: seed,
                    ..params.forest.clone()
                };
                TrainedModel::RandomForest(fit_forest(x, y, &forest)?)
            }
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::MultipleLinear(_) => ModelKind::MultipleLinear,
            TrainedModel::Polynomial(_) => ModelKind::Polynomial,
            TrainedModel::SupportVector(_) => ModelKind::SupportVector,
            TrainedModel::DecisionTree(_) => ModelKind::DecisionTree,
            TrainedModel::RandomForest(_) => ModelKind::RandomForest,
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, RegressError> {
        match self {
            TrainedModel::MultipleLinear(m) => m.predict(x),
            TrainedModel::Polynomial(m) => m.predict(x),
            TrainedModel::SupportVector(m) => m.predict(x),
            TrainedModel::DecisionTree(m) => m.predict(x),
            TrainedModel::RandomForest(m) => m.predict(x),
        }
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("models serialize")
    }

    pub fn from_json(json: &str) -> Result<Self, RegressError> {
        let value: serde_json::Value =
            serde_json::from_str(json).map_err(|e| RegressError::Serde(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| RegressError::Serde("missing format_version".into()))?;
        if version != u64::from(MODEL_FORMAT_VERSION) {
            return Err(RegressError::FormatVersion(version as u32));
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| RegressError::Serde(e.to_string()))?;
        Ok(file.model)
    }
}
