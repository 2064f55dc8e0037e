use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::PipelineConfig;
use super::io::{read_feature_table, write_csv, write_json, write_text, Provenance};
use super::{features_csv_path, player_file_stem, resolve_players, train_dir, PipelineError};
use crate::evaluation::{
    accuracy_report, comparison_series, r2_score, EvaluationReport, ScoreCell, SeriesPoint,
};
use crate::preprocess::{
    apply_scaler, drop_incomplete, encode, fit_scaler, select_features, train_test_split,
    ColumnScale, Dataset, ScalerParams, SplitSpec,
};
use crate::regressors::{ModelKind, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerOutcome {
    pub player: String,
    pub rows_used: usize,
    pub rows_dropped: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Test R^2 of predicting the training mean for every test row.
    pub baseline_r2: f64,
    pub scores: Vec<(ModelKind, f64)>,
    #[serde(skip)]
    pub models: Vec<TrainedModel>,
    #[serde(skip)]
    pub series: Vec<(ModelKind, Vec<SeriesPoint>)>,
    #[serde(skip)]
    pub scaler: ScalerParams,
    #[serde(skip)]
    pub label_scale: Option<ColumnScale>,
    pub warnings: Vec<String>,
}

impl PlayerOutcome {
    pub fn score(&self, kind: ModelKind) -> Option<f64> {
        self.scores
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, r)| *r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub report: EvaluationReport,
    pub players: Vec<PlayerOutcome>,
    pub output: PathBuf,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    test_fraction: f64,
    fit_scaler_on_train: bool,
    scale_label: bool,
    report: &'a EvaluationReport,
    players: BTreeMap<&'a str, PlayerStats<'a>>,
}

#[derive(Serialize)]
struct PlayerStats<'a> {
    rows_used: usize,
    rows_dropped: usize,
    train_rows: usize,
    test_rows: usize,
    baseline_r2: f64,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct SplitManifest<'a> {
    player: &'a str,
    test_fraction: f64,
    train: &'a [String],
    test: &'a [String],
}

#[derive(Serialize)]
struct ScalerSidecar<'a> {
    player: &'a str,
    fitted_on: &'static str,
    features: &'a ScalerParams,
    label: Option<&'a ColumnScale>,
}

fn train_player(config: &PipelineConfig, player: &str) -> Result<PlayerOutcome, PipelineError> {
    let path = features_csv_path(config, player);
    if !path.exists() {
        return Err(PipelineError::MissingFeatures {
            player: player.to_string(),
            path,
        });
    }
    let prep = |source| PipelineError::Preprocess {
        player: player.to_string(),
        source,
    };
    let table = read_feature_table(&path)?;
    let (table, rows_dropped) = drop_incomplete(&table).map_err(prep)?;
    let encoded = encode(&select_features(&table).map_err(prep)?).map_err(prep)?;
    let data = Dataset::from_table(&encoded).map_err(prep)?;

    let split = train_test_split(
        data.n_rows(),
        &SplitSpec {
            seed: config.seed,
            test_fraction: config.test_fraction,
        },
    )
    .map_err(prep)?;

    let fit_rows = if config.fit_scaler_on_train {
        data.subset(&split.train)
    } else {
        data.clone()
    };
    let scaler = fit_scaler(&fit_rows.x, &data.feature_names).map_err(prep)?;
    let label_scale = if config.scale_label {
        Some(ColumnScale::fit(&fit_rows.y).map_err(prep)?)
    } else {
        None
    };
    let scaled = Dataset {
        x: apply_scaler(&data.x, &scaler).map_err(prep)?,
        y: data
            .y
            .iter()
            .map(|&v| label_scale.map_or(v, |s| s.transform(v)))
            .collect(),
        ..data.clone()
    };
    let train = scaled.subset(&split.train);
    let test = scaled.subset(&split.test);

    let eval = |source| PipelineError::Evaluation {
        player: player.to_string(),
        source,
    };
    let train_mean = train.y.iter().sum::<f64>() / train.n_rows() as f64;
    let baseline_r2 = r2_score(&test.y, &vec![train_mean; test.n_rows()]).map_err(eval)?;

    let mut outcome = PlayerOutcome {
        player: player.to_string(),
        rows_used: data.n_rows(),
        rows_dropped,
        train_ids: train.row_ids.clone(),
        test_ids: test.row_ids.clone(),
        baseline_r2,
        scores: Vec::new(),
        models: Vec::new(),
        series: Vec::new(),
        scaler: scaler.clone(),
        label_scale,
        warnings: scaler
            .constant_columns()
            .map(|c| format!("constant column {c:?} left unscaled"))
            .collect(),
    };
    for kind in ModelKind::ALL {
        let regress = |source| PipelineError::Regress {
            player: player.to_string(),
            model: kind,
            source,
        };
        let model = TrainedModel::fit(kind, &train.x, &train.y, &config.models, config.seed)
            .map_err(regress)?;
        if let TrainedModel::SupportVector(svr) = &model {
            if !svr.converged {
                outcome.warnings.push(format!(
                    "SVR stopped at the pass cap with KKT gap {:.3e}",
                    svr.final_gap
                ));
            }
        }
        let predicted = model.predict(&test.x).map_err(regress)?;
        let r2 = r2_score(&test.y, &predicted).map_err(eval)?;
        let series = comparison_series(&test.y, &predicted, label_scale.as_ref()).map_err(eval)?;
        outcome.scores.push((kind, r2));
        outcome.series.push((kind, series));
        outcome.models.push(model);
    }
    Ok(outcome)
}

fn write_player(
    dir: &Path,
    provenance: &Provenance,
    config: &PipelineConfig,
    o: &PlayerOutcome,
) -> Result<(), PipelineError> {
    let stem = player_file_stem(&o.player);
    for model in &o.models {
        let value: serde_json::Value =
            serde_json::from_str(&model.to_json()).expect("model json is valid");
        write_json(
            &dir.join("models")
                .join(&stem)
                .join(format!("{}.json", model.kind().slug())),
            provenance,
            &value,
        )?;
    }
    for (kind, series) in &o.series {
        write_csv(
            &dir.join("series")
                .join(format!("{stem}_{}.csv", kind.slug())),
            provenance,
            &["index", "actual", "predicted"],
            series.iter().map(|p| {
                vec![
                    p.index.to_string(),
                    p.actual.to_string(),
                    p.predicted.to_string(),
                ]
            }),
        )?;
    }
    write_json(
        &dir.join("splits").join(format!("{stem}.json")),
        provenance,
        &SplitManifest {
            player: &o.player,
            test_fraction: config.test_fraction,
            train: &o.train_ids,
            test: &o.test_ids,
        },
    )?;
    write_json(
        &dir.join("scalers").join(format!("{stem}.json")),
        provenance,
        &ScalerSidecar {
            player: &o.player,
            fitted_on: if config.fit_scaler_on_train {
                "train"
            } else {
                "full"
            },
            features: &o.scaler,
            label: o.label_scale.as_ref(),
        },
    )
}

fn write_outputs(
    dir: &Path,
    config: &PipelineConfig,
    report: &EvaluationReport,
    players: &[PlayerOutcome],
) -> Result<(), PipelineError> {
    let provenance = Provenance {
        config_hash: config.hash(),
        seed: config.seed,
    };
    for outcome in players {
        write_player(dir, &provenance, config, outcome)?;
    }
    let table = report.to_table();
    write_csv(
        &dir.join("report.csv"),
        &provenance,
        &table[0],
        table[1..].iter().cloned(),
    )?;
    write_json(
        &dir.join("report.json"),
        &provenance,
        &ReportFile {
            test_fraction: config.test_fraction,
            fit_scaler_on_train: config.fit_scaler_on_train,
            scale_label: config.scale_label,
            report,
            players: players
                .iter()
                .map(|o| {
                    (
                        o.player.as_str(),
                        PlayerStats {
                            rows_used: o.rows_used,
                            rows_dropped: o.rows_dropped,
                            train_rows: o.train_ids.len(),
                            test_rows: o.test_ids.len(),
                            baseline_r2: o.baseline_r2,
                            warnings: &o.warnings,
                        },
                    )
                })
                .collect(),
        },
    )?;
    write_text(&dir.join("config.toml"), &config.to_toml())
}

/// Trains all five models per player, scores them on the held-out rows and
/// writes the report, series, models, split manifests and scaler sidecars.
///
/// Outputs are staged and only replace `train/` once everything succeeded.
pub fn train_evaluate(config: &PipelineConfig) -> Result<TrainSummary, PipelineError> {
    config.validate()?;
    let players = resolve_players(config)?;
    let outcomes = players
        .iter()
        .map(|p| train_player(config, p))
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<ScoreCell> = outcomes
        .iter()
        .flat_map(|o| {
            o.scores.iter().map(|(model, r2)| ScoreCell {
                player: o.player.clone(),
                model: *model,
                r2: *r2,
            })
        })
        .collect();
    let report = accuracy_report(&cells).map_err(|source| PipelineError::Evaluation {
        player: players.join(", "),
        source,
    })?;

    let final_dir = train_dir(config);
    let staging = config.paths.output_dir.join("train.partial");
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| PipelineError::io(&staging, e))?;
    }
    if let Err(e) = write_outputs(&staging, config, &report, &outcomes) {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    if final_dir.exists() {
        fs::remove_dir_all(&final_dir).map_err(|e| PipelineError::io(&final_dir, e))?;
    }
    fs::rename(&staging, &final_dir).map_err(|e| PipelineError::io(&final_dir, e))?;
    Ok(TrainSummary {
        report,
        players: outcomes,
        output: final_dir,
    })
}
