use std::path::PathBuf;

use super::config::PipelineConfig;
use super::io::{read_feature_table, write_csv, Provenance};
use super::{correlation_dir, features_csv_path, player_file_stem, resolve_players, PipelineError};
use crate::evaluation::{pearson_matrix, CorrelationMatrix, EvalError};
use crate::preprocess::{Cell, ColumnKind};

/// Pearson matrix over the numeric columns of each player's feature file,
/// using rows where every numeric cell is present.
pub fn correlate(
    config: &PipelineConfig,
) -> Result<Vec<(String, CorrelationMatrix, PathBuf)>, PipelineError> {
    let provenance = Provenance {
        config_hash: config.hash(),
        seed: config.seed,
    };
    let mut results = Vec::new();
    for player in resolve_players(config)? {
        let path = features_csv_path(config, &player);
        if !path.exists() {
            return Err(PipelineError::MissingFeatures { player, path });
        }
        let table = read_feature_table(&path)?;
        let numeric: Vec<usize> = table
            .columns()
            .iter()
            .enumerate()
            .filter(|(i, spec)| {
                spec.kind != ColumnKind::Categorical
                    && table.rows().iter().all(|r| !matches!(r[*i], Cell::Text(_)))
                    && table.rows().iter().any(|r| matches!(r[*i], Cell::Num(_)))
            })
            .map(|(i, _)| i)
            .collect();
        let complete: Vec<&Vec<Cell>> = table
            .rows()
            .iter()
            .filter(|r| numeric.iter().all(|&i| matches!(r[i], Cell::Num(_))))
            .collect();
        let labels: Vec<String> = numeric
            .iter()
            .map(|&i| table.columns()[i].name.clone())
            .collect();
        let columns: Vec<Vec<f64>> = numeric
            .iter()
            .map(|&i| {
                complete
                    .iter()
                    .map(|r| match r[i] {
                        Cell::Num(v) => v,
                        _ => unreachable!("filtered to numeric rows"),
                    })
                    .collect()
            })
            .collect();
        if complete.len() < 2 || columns.is_empty() {
            return Err(PipelineError::Evaluation {
                player,
                source: EvalError::TooFewRows(complete.len()),
            });
        }
        let matrix =
            pearson_matrix(&labels, &columns).map_err(|source| PipelineError::Evaluation {
                player: player.clone(),
                source,
            })?;
        let out = correlation_dir(config).join(format!("{}.csv", player_file_stem(&player)));
        let mut header = vec!["column".to_string()];
        header.extend(labels.iter().cloned());
        write_csv(
            &out,
            &provenance,
            &header,
            labels.iter().zip(&matrix.values).map(|(label, row)| {
                std::iter::once(label.clone())
                    .chain(row.iter().map(|v| v.to_string()))
                    .collect::<Vec<_>>()
            }),
        )?;
        results.push((player, matrix, out));
    }
    Ok(results)
}
