use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use super::config::PipelineConfig;
use super::io::{open_csv, write_csv, Provenance};
use super::{control_csv_path, features_csv_path, features_dir, PipelineError};
use crate::corpus::WeatherCategory;
use crate::features::{build_feature_row, MatchRecord};
use crate::preprocess::LABEL_COLUMN;

pub(crate) const EXCLUSIONS_STEM: &str = "exclusions";

/// Required header of the match CSV.
pub const MATCH_COLUMNS: [&str; 18] = [
    "match_id",
    "player",
    "Start Date",
    "Ground",
    "Opposition",
    "Opposition Rank",
    "Runs",
    "BF",
    "SR",
    "4s",
    "6s",
    "Dot Ball %",
    "Out/NotOut",
    "Home/Away",
    "Win/Loss",
    "Team Run",
    "In At Position",
    "Pitch",
];

/// Columns appended to each match row in the derived CSV.
pub const DERIVED_COLUMNS: [&str; 13] = [
    "Middled",
    "Left Alone",
    "Control",
    "Weather",
    "Dot Ball",
    "Scoring Shot",
    "Scoring Rate",
    "Others",
    "Running Fraction",
    "Opposition Index",
    "Pitch Index",
    LABEL_COLUMN,
    "Weather Defaulted",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub match_id: String,
    pub player: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildSummary {
    pub rows_in: usize,
    pub rows_out: usize,
    pub exclusions: Vec<Exclusion>,
    /// Written feature file per player.
    pub outputs: BTreeMap<String, PathBuf>,
}

struct ControlRow {
    middled: String,
    left_alone: String,
    control: f64,
    weather: WeatherCategory,
    defaulted: String,
}

fn read_control(path: &Path) -> Result<HashMap<String, ControlRow>, PipelineError> {
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| PipelineError::csv(path, e))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PipelineError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let (id, m, l, c, w, d) = (
        col("match_id")?,
        col("middled")?,
        col("left_alone")?,
        col("control")?,
        col("weather")?,
        col("weather_defaulted")?,
    );
    let mut out = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| PipelineError::csv(path, e))?;
        let bad =
            |what: &str| PipelineError::csv(path, format!("match {}: bad {what}", &record[id]));
        out.insert(
            record[id].to_string(),
            ControlRow {
                middled: record[m].to_string(),
                left_alone: record[l].to_string(),
                control: record[c].parse().map_err(|_| bad("control"))?,
                weather: record[w].parse().map_err(|_| bad("weather"))?,
                defaulted: record[d].to_string(),
            },
        );
    }
    Ok(out)
}

fn field<T: FromStr>(row: &[&str], index: usize, name: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    let raw = row[index].trim();
    if raw.is_empty() {
        return Err(format!("missing value in column {name:?}"));
    }
    raw.parse::<T>()
        .map_err(|e| format!("column {name:?}: cannot parse {raw:?}: {e}"))
}

fn parse_record(row: &[&str], control: &ControlRow) -> Result<MatchRecord, String> {
    let get = |i: usize| row[i].trim().to_string();
    let date: String = field(row, 2, MATCH_COLUMNS[2])?;
    let start_date = NaiveDate::parse_from_str(&date, "%Y-%m-%d")
        .map_err(|e| format!("column \"Start Date\": {date:?} is not an ISO-8601 date: {e}"))?;
    let record = MatchRecord {
        match_id: get(0),
        player: get(1),
        start_date,
        ground: get(3),
        opposition: get(4),
        opposition_rank: field(row, 5, MATCH_COLUMNS[5])?,
        runs: field(row, 6, MATCH_COLUMNS[6])?,
        balls_faced: field(row, 7, MATCH_COLUMNS[7])?,
        strike_rate: field(row, 8, MATCH_COLUMNS[8])?,
        fours: field(row, 9, MATCH_COLUMNS[9])?,
        sixes: field(row, 10, MATCH_COLUMNS[10])?,
        dot_ball_pct: field(row, 11, MATCH_COLUMNS[11])?,
        out_not_out: field(row, 12, MATCH_COLUMNS[12])?,
        home_away: field(row, 13, MATCH_COLUMNS[13])?,
        win_loss: field(row, 14, MATCH_COLUMNS[14])?,
        team_run: field(row, 15, MATCH_COLUMNS[15])?,
        in_at_position: field(row, 16, MATCH_COLUMNS[16])?,
        pitch: field(row, 17, MATCH_COLUMNS[17])?,
        weather: control.weather,
        control: control.control,
    };
    if record.strike_rate.is_nan() || record.strike_rate < 0.0 {
        return Err(format!("strike rate {} is negative", record.strike_rate));
    }
    Ok(record)
}

/// Joins match rows with commentary control, derives every computed column
/// and writes one CSV per player. Rows that fail to parse or violate a row
/// invariant are excluded and listed in `features/exclusions.csv`.
pub fn build_features(config: &PipelineConfig) -> Result<BuildSummary, PipelineError> {
    let match_path = &config.paths.match_csv;
    PipelineConfig::require_path(match_path, "match CSV")?;
    let control_path = control_csv_path(config);
    PipelineConfig::require_path(&control_path, "control CSV (run parse-commentary first)")?;
    let control = read_control(&control_path)?;

    let file = File::open(match_path).map_err(|e| PipelineError::io(match_path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| PipelineError::csv(match_path, e))?
        .clone();
    let mut positions = Vec::with_capacity(MATCH_COLUMNS.len());
    for name in MATCH_COLUMNS {
        positions.push(headers.iter().position(|h| h == name).ok_or_else(|| {
            PipelineError::MissingColumn {
                path: match_path.clone(),
                column: name.to_string(),
            }
        })?);
    }

    let mut header: Vec<String> = headers.iter().map(str::to_string).collect();
    header.extend(DERIVED_COLUMNS.iter().map(|s| s.to_string()));

    let mut per_player: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    let mut exclusions = Vec::new();
    let mut rows_in = 0;
    for record in reader.records() {
        let record = record.map_err(|e| PipelineError::csv(match_path, e))?;
        rows_in += 1;
        let row: Vec<&str> = positions
            .iter()
            .map(|&p| record.get(p).unwrap_or(""))
            .collect();
        let (match_id, player) = (row[0].trim().to_string(), row[1].trim().to_string());
        let Some(ctrl) = control.get(&match_id) else {
            return Err(PipelineError::JoinKeyMissing(match_id));
        };
        let derived = parse_record(&row, ctrl).and_then(|r| {
            build_feature_row(&r)
                .map(|d| (r, d))
                .map_err(|e| e.to_string())
        });
        let (rec, d) = match derived {
            Ok(v) => v,
            Err(reason) => {
                exclusions.push(Exclusion {
                    match_id,
                    player,
                    reason,
                });
                continue;
            }
        };
        let mut out: Vec<String> = record.iter().map(str::to_string).collect();
        out.extend([
            ctrl.middled.clone(),
            ctrl.left_alone.clone(),
            rec.control.to_string(),
            rec.weather.to_string(),
            d.dot_balls.to_string(),
            d.scoring_shots.to_string(),
            d.scoring_rate.to_string(),
            d.others.to_string(),
            d.running_fraction.to_string(),
            d.opposition_index.to_string(),
            d.pitch_index.to_string(),
            d.impact.to_string(),
            ctrl.defaulted.clone(),
        ]);
        per_player.entry(player).or_default().push(out);
    }

    let provenance = Provenance {
        config_hash: config.hash(),
        seed: config.seed,
    };
    let mut outputs = BTreeMap::new();
    let mut rows_out = 0;
    for (player, rows) in per_player {
        let path = features_csv_path(config, &player);
        rows_out += rows.len();
        write_csv(&path, &provenance, &header, rows)?;
        outputs.insert(player, path);
    }
    write_csv(
        &features_dir(config).join(format!("{EXCLUSIONS_STEM}.csv")),
        &provenance,
        &["match_id", "player", "reason"],
        exclusions
            .iter()
            .map(|e| vec![e.match_id.clone(), e.player.clone(), e.reason.clone()]),
    )?;
    Ok(BuildSummary {
        rows_in,
        rows_out,
        exclusions,
        outputs,
    })
}
