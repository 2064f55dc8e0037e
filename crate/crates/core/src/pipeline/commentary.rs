use std::fs::File;
use std::path::PathBuf;

use serde::Serialize;

use super::config::PipelineConfig;
use super::io::{write_csv, Provenance};
use super::{control_csv_path, PipelineError};
use crate::corpus::{
    compute_control, extract_weather, read_commentary, tally_innings, Lexicon, ShotTally,
    WeatherReading,
};

pub const CONTROL_HEADER: [&str; 7] = [
    "match_id",
    "middled",
    "left_alone",
    "balls_faced",
    "control",
    "weather",
    "weather_defaulted",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InningsControl {
    pub match_id: String,
    pub tally: ShotTally,
    pub control: f64,
    pub weather: WeatherReading,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommentarySummary {
    pub innings: Vec<InningsControl>,
    pub weather_defaulted: usize,
    pub output: PathBuf,
}

/// Tallies every `<match_id>.csv` in the commentary directory. Weather comes
/// from an optional `<match_id>.prematch.txt` next to it.
///
/// Nothing is written unless every file parses.
pub fn parse_commentary(config: &PipelineConfig) -> Result<CommentarySummary, PipelineError> {
    let dir = &config.paths.commentary_dir;
    PipelineConfig::require_path(dir, "commentary directory")?;
    PipelineConfig::require_path(&config.paths.lexicon, "lexicon file")?;
    let lexicon = Lexicon::load(&config.paths.lexicon)?;

    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| PipelineError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(PipelineError::NoCommentaryFiles(dir.clone()));
    }

    let mut innings = Vec::with_capacity(files.len());
    let mut failures = Vec::new();
    for path in &files {
        let match_id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let parsed = File::open(path)
            .map_err(crate::corpus::CorpusError::from)
            .and_then(read_commentary)
            .and_then(|events| tally_innings(&events, &lexicon.shots));
        let tally = match parsed {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        let prematch_path = path.with_extension("prematch.txt");
        let prematch = if prematch_path.exists() {
            std::fs::read_to_string(&prematch_path)
                .map_err(|e| PipelineError::io(&prematch_path, e))?
        } else {
            String::new()
        };
        innings.push(InningsControl {
            match_id,
            control: compute_control(&tally)?,
            tally,
            weather: extract_weather(&prematch, &lexicon.weather),
        });
    }
    if !failures.is_empty() {
        return Err(PipelineError::CommentaryFailures(failures));
    }

    let provenance = Provenance {
        config_hash: config.hash(),
        seed: config.seed,
    };
    let output = control_csv_path(config);
    write_csv(
        &output,
        &provenance,
        &CONTROL_HEADER,
        innings.iter().map(|i| {
            vec![
                i.match_id.clone(),
                i.tally.middled.to_string(),
                i.tally.left_alone.to_string(),
                i.tally.balls_faced.to_string(),
                i.control.to_string(),
                i.weather.category.to_string(),
                i.weather.defaulted.to_string(),
            ]
        }),
    )?;
    let weather_defaulted = innings.iter().filter(|i| i.weather.defaulted).count();
    Ok(CommentarySummary {
        innings,
        weather_defaulted,
        output,
    })
}
