//! Stage-by-stage driver: commentary -> control, matches -> features,
//! features -> models and reports, features -> correlation.
//!
//! Stages talk to each other only through files under the configured output
//! directory:
//!
//! ```text
//! control.csv                       parse-commentary
//! features/<player>.csv             build-features
//! features/exclusions.csv           build-features
//! train/report.csv, report.json     train
//! train/models/<player>/<model>.json
//! train/series/<player>_<model>.csv
//! train/splits/<player>.json
//! train/scalers/<player>.json
//! correlation/<player>.csv          correlate
//! ```
//!
//! Every CSV written here opens with a `#` provenance line carrying the
//! config hash and seed; every JSON file has `config_hash` and `seed` keys.

use std::path::{Path, PathBuf};

use thiserror::Error;

mod build;
mod commentary;
mod config;
mod correlate;
mod io;
mod train;

pub use build::{build_features, BuildSummary, Exclusion, MATCH_COLUMNS};
pub use commentary::{parse_commentary, CommentarySummary, InningsControl};
pub use config::{Paths, PipelineConfig};
pub use correlate::correlate;
pub use io::{read_feature_table, Provenance};
pub use train::{train_evaluate, PlayerOutcome, TrainSummary};

use crate::corpus::CorpusError;
use crate::evaluation::EvalError;
use crate::preprocess::PreprocessError;
use crate::regressors::{ModelKind, RegressError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{what} not found: {path}")]
    MissingInput { what: String, path: PathBuf },
    #[error("no commentary files in {0}")]
    NoCommentaryFiles(PathBuf),
    #[error("{} commentary file(s) failed:\n{}", .0.len(), .0.join("\n"))]
    CommentaryFailures(Vec<String>),
    #[error("lexicon: {0}")]
    Lexicon(#[from] CorpusError),
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("match {0:?} has no commentary control row")]
    JoinKeyMissing(String),
    #[error("no derived feature file for player {player:?} at {path}")]
    MissingFeatures { player: String, path: PathBuf },
    #[error("no players found in {0}")]
    NoPlayers(PathBuf),
    #[error("player {player:?}: {source}")]
    Preprocess {
        player: String,
        #[source]
        source: PreprocessError,
    },
    #[error("player {player:?}, {} model: {source}", .model.display_name())]
    Regress {
        player: String,
        model: ModelKind,
        #[source]
        source: RegressError,
    },
    #[error("player {player:?}: {source}")]
    Evaluation {
        player: String,
        #[source]
        source: EvalError,
    },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, err: impl std::fmt::Display) -> Self {
        PipelineError::Csv {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}

/// File-name form of a player name.
pub fn player_file_stem(player: &str) -> String {
    player
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn control_csv_path(config: &PipelineConfig) -> PathBuf {
    config.paths.output_dir.join("control.csv")
}

pub fn features_dir(config: &PipelineConfig) -> PathBuf {
    config.paths.output_dir.join("features")
}

pub fn features_csv_path(config: &PipelineConfig, player: &str) -> PathBuf {
    features_dir(config).join(format!("{}.csv", player_file_stem(player)))
}

pub fn train_dir(config: &PipelineConfig) -> PathBuf {
    config.paths.output_dir.join("train")
}

pub fn correlation_dir(config: &PipelineConfig) -> PathBuf {
    config.paths.output_dir.join("correlation")
}

/// Players named in the config, or every per-player feature file present.
pub(crate) fn resolve_players(config: &PipelineConfig) -> Result<Vec<String>, PipelineError> {
    if !config.players.is_empty() {
        return Ok(config.players.clone());
    }
    let dir = features_dir(config);
    let entries = std::fs::read_dir(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    let mut players = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| PipelineError::io(&dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                if stem != build::EXCLUSIONS_STEM {
                    players.push(stem.to_string());
                }
            }
        }
    }
    players.sort();
    if players.is_empty() {
        return Err(PipelineError::NoPlayers(dir));
    }
    Ok(players)
}
