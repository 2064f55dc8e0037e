//! Match-level derived columns, index tables and the Effective Runs label.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::WeatherCategory;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("opposition rank must be >= 1, got {0}")]
    InvalidRank(u32),
    #[error("dot ball percentage {0} outside [0, 100]")]
    PercentOutOfRange(f64),
    #[error("{runs} runs with no scoring shots")]
    InconsistentRow { runs: u32 },
    #[error("boundary runs {boundary_runs} exceed total runs {runs}")]
    BoundaryOverflow { runs: u32, boundary_runs: u32 },
    #[error("control {0} outside [0, 1]")]
    ControlOutOfRange(f64),
    #[error("batting position {0} outside 1..=11")]
    PositionOutOfRange(u32),
    #[error("row {row_id}: {source}")]
    InRow {
        row_id: String,
        #[source]
        source: Box<FeatureError>,
    },
}

macro_rules! labelled_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let wanted: String = s.chars().filter(|c| !c.is_whitespace()).collect();
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| {
                        let label: String = v.as_str().chars().filter(|c| !c.is_whitespace()).collect();
                        label.eq_ignore_ascii_case(&wanted)
                    })
                    .ok_or_else(|| format!("unknown {} value {s:?}", stringify!($name)))
            }
        }
    };
}

labelled_enum!(OutNotOut { Out => "Out", NotOut => "NotOut" });
// Alphabetical: these orders double as one-hot column orders.
labelled_enum!(HomeAway { Away => "Away", Home => "Home", Neutral => "Neutral" });
labelled_enum!(WinLoss { Draw => "Draw", Loss => "Loss", NoResult => "No Result", Win => "Win" });
labelled_enum!(Pitch { Dry => "Dry", Flat => "Flat", Green => "Green" });

/// One player-match row: raw scorecard columns plus the commentary-derived
/// control and weather.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    pub match_id: String,
    pub player: String,
    pub start_date: NaiveDate,
    pub ground: String,
    pub opposition: String,
    pub runs: u32,
    pub balls_faced: u32,
    pub strike_rate: f64,
    pub fours: u32,
    pub sixes: u32,
    pub dot_ball_pct: f64,
    pub out_not_out: OutNotOut,
    pub home_away: HomeAway,
    pub win_loss: WinLoss,
    pub team_run: u32,
    pub in_at_position: u32,
    pub opposition_rank: u32,
    pub pitch: Pitch,
    pub weather: WeatherCategory,
    pub control: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedFeatures {
    pub dot_balls: u32,
    pub scoring_shots: u32,
    pub scoring_rate: f64,
    pub others: u32,
    pub running_fraction: f64,
    pub opposition_index: u8,
    pub pitch_index: f64,
    pub impact: f64,
}

/// Threat weight of an opposition side, from its ranking in groups of three.
pub fn opposition_index(rank: u32) -> Result<u8, FeatureError> {
    match rank {
        0 => Err(FeatureError::InvalidRank(rank)),
        1..=3 => Ok(5),
        4..=6 => Ok(4),
        7..=9 => Ok(3),
        10..=12 => Ok(2),
        _ => Ok(1),
    }
}

pub fn pitch_index(pitch: Pitch) -> f64 {
    match pitch {
        Pitch::Green => 2.0,
        Pitch::Dry => 1.5,
        Pitch::Flat => 1.0,
    }
}

/// Converts a dot-ball percentage back into a count, rounding half up.
pub fn dot_balls(dot_ball_pct: f64, balls_faced: u32) -> Result<u32, FeatureError> {
    if !(0.0..=100.0).contains(&dot_ball_pct) {
        return Err(FeatureError::PercentOutOfRange(dot_ball_pct));
    }
    let raw = dot_ball_pct * f64::from(balls_faced) / 100.0;
    let rounded = (raw + 0.5).floor();
    Ok((rounded.max(0.0) as u32).min(balls_faced))
}

/// Runs per scoring shot; zero when nothing was scored.
pub fn scoring_rate(runs: u32, scoring_shots: u32) -> Result<f64, FeatureError> {
    match (runs, scoring_shots) {
        (0, 0) => Ok(0.0),
        (runs, 0) => Err(FeatureError::InconsistentRow { runs }),
        (runs, shots) => Ok(f64::from(runs) / f64::from(shots)),
    }
}

/// Non-boundary runs and their share of the total.
pub fn others_and_running_fraction(
    runs: u32,
    fours: u32,
    sixes: u32,
) -> Result<(u32, f64), FeatureError> {
    let boundary_runs = 4 * fours + 6 * sixes;
    if boundary_runs > runs {
        return Err(FeatureError::BoundaryOverflow {
            runs,
            boundary_runs,
        });
    }
    let others = runs - boundary_runs;
    let fraction = if runs == 0 {
        0.0
    } else {
        f64::from(others) / f64::from(runs)
    };
    Ok((others, fraction))
}

/// Effective Runs: runs scaled by `e^control`.
pub fn effective_runs(runs: u32, control: f64) -> Result<f64, FeatureError> {
    if !(0.0..=1.0).contains(&control) {
        return Err(FeatureError::ControlOutOfRange(control));
    }
    Ok(f64::from(runs) * control.exp())
}

pub fn build_feature_row(record: &MatchRecord) -> Result<DerivedFeatures, FeatureError> {
    derive(record).map_err(|e| FeatureError::InRow {
        row_id: record.match_id.clone(),
        source: Box::new(e),
    })
}

fn derive(record: &MatchRecord) -> Result<DerivedFeatures, FeatureError> {
    if !(1..=11).contains(&record.in_at_position) {
        return Err(FeatureError::PositionOutOfRange(record.in_at_position));
    }
    let dot_balls = dot_balls(record.dot_ball_pct, record.balls_faced)?;
    let scoring_shots = record.balls_faced - dot_balls;
    let (others, running_fraction) =
        others_and_running_fraction(record.runs, record.fours, record.sixes)?;
    Ok(DerivedFeatures {
        dot_balls,
        scoring_shots,
        scoring_rate: scoring_rate(record.runs, scoring_shots)?,
        others,
        running_fraction,
        opposition_index: opposition_index(record.opposition_rank)?,
        pitch_index: pitch_index(record.pitch),
        impact: effective_runs(record.runs, record.control)?,
    })
}
