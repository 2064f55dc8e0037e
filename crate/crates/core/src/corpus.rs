//! Ball-by-ball commentary parsing and shot-control statistics.
//!
//! Each delivery line is classified with a keyword lexicon into one of three
//! shot classes. An innings' control is the fraction of deliveries that were
//! either middled or deliberately left alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest ball number accepted within an over (no-ball re-bowls push the
/// count past six).
pub const MAX_BALL_IN_OVER: u32 = 12;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("malformed over token {token:?}: {reason}")]
    MalformedOverToken { token: String, reason: &'static str },
    #[error("malformed runs token {0:?}")]
    MalformedRunsToken(String),
    #[error("innings has no deliveries")]
    EmptyInnings,
    #[error("control is undefined for zero balls faced")]
    ZeroBallsFaced,
    #[error("series lengths differ: {calculated} calculated vs {actual} actual")]
    LengthMismatch { calculated: usize, actual: usize },
    #[error("series is empty")]
    EmptySeries,
    #[error("published control at index {index} is {value}, must be > 0")]
    NonPositiveActual { index: usize, value: f64 },
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("row {row} (line {line}): {source}")]
    AtRow {
        row: u64,
        line: u64,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("row {row} (line {line}): expected 3 fields, found {found}")]
    WrongFieldCount { row: u64, line: u64, found: usize },
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<csv::Error> for CorpusError {
    fn from(err: csv::Error) -> Self {
        CorpusError::Csv(err.to_string())
    }
}

impl From<std::io::Error> for CorpusError {
    fn from(err: std::io::Error) -> Self {
        CorpusError::Io(err.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShotClass {
    Middled,
    LeftAlone,
    Uncontrolled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WeatherCategory {
    Clear,
    Overcast,
    Sunny,
    Windy,
}

impl WeatherCategory {
    /// Alphabetical order, which is also the one-hot column order.
    pub const ALL: [WeatherCategory; 4] = [
        WeatherCategory::Clear,
        WeatherCategory::Overcast,
        WeatherCategory::Sunny,
        WeatherCategory::Windy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WeatherCategory::Clear => "Clear",
            WeatherCategory::Overcast => "Overcast",
            WeatherCategory::Sunny => "Sunny",
            WeatherCategory::Windy => "Windy",
        }
    }
}

impl fmt::Display for WeatherCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeatherCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WeatherCategory::ALL
            .into_iter()
            .find(|w| w.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown weather category {s:?}"))
    }
}

/// One ball of commentary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryEvent {
    pub over: u32,
    pub ball: u32,
    pub runs: u32,
    pub text: String,
    pub shot_class: ShotClass,
}

impl DeliveryEvent {
    /// Renders the event back into the `(over_ball, runs, commentary)` record
    /// layout accepted by [`parse_delivery`].
    pub fn to_record(&self) -> [String; 3] {
        [
            format!("{}.{}", self.over, self.ball),
            self.runs.to_string(),
            self.text.clone(),
        ]
    }
}

fn parse_over_token(token: &str) -> Result<(u32, u32), CorpusError> {
    let malformed = |reason| CorpusError::MalformedOverToken {
        token: token.to_string(),
        reason,
    };
    let (over, ball) = token
        .trim()
        .split_once('.')
        .ok_or(malformed("missing '.'"))?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(over) || !digits(ball) {
        return Err(malformed("over and ball must be decimal digits"));
    }
    let over = over
        .parse()
        .map_err(|_| malformed("over number too large"))?;
    let ball: u32 = ball
        .parse()
        .map_err(|_| malformed("ball number too large"))?;
    if ball == 0 || ball > MAX_BALL_IN_OVER {
        return Err(malformed("ball must be between 1 and 12"));
    }
    Ok((over, ball))
}

fn parse_runs_token(token: &str) -> Result<u32, CorpusError> {
    let t = token.trim();
    if t == "•" || t.eq_ignore_ascii_case("no run") {
        return Ok(0);
    }
    if t.eq_ignore_ascii_case("four") {
        return Ok(4);
    }
    if t.eq_ignore_ascii_case("six") {
        return Ok(6);
    }
    if !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) {
        return t
            .parse()
            .map_err(|_| CorpusError::MalformedRunsToken(token.to_string()));
    }
    Err(CorpusError::MalformedRunsToken(token.to_string()))
}

/// Parses one `(over_ball, runs, commentary)` record.
///
/// The commentary text is kept verbatim and the shot class starts out as
/// [`ShotClass::Uncontrolled`] until [`classify_shot`] runs.
pub fn parse_delivery(
    over_ball: &str,
    runs: &str,
    text: &str,
) -> Result<DeliveryEvent, CorpusError> {
    let (over, ball) = parse_over_token(over_ball)?;
    let runs = parse_runs_token(runs)?;
    Ok(DeliveryEvent {
        over,
        ball,
        runs,
        text: text.to_string(),
        shot_class: ShotClass::Uncontrolled,
    })
}

/// Reads a commentary CSV (`over_ball,runs,commentary`) into events.
///
/// Errors carry the 1-based data row (header excluded) and file line.
pub fn read_commentary<R: Read>(reader: R) -> Result<Vec<DeliveryEvent>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let mut events = Vec::new();
    for (index, record) in rdr.records().enumerate() {
        let record = record?;
        let row = index as u64 + 1;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 3 {
            return Err(CorpusError::WrongFieldCount {
                row,
                line,
                found: record.len(),
            });
        }
        let event =
            parse_delivery(&record[0], &record[1], &record[2]).map_err(|e| CorpusError::AtRow {
                row,
                line,
                source: Box::new(e),
            })?;
        events.push(event);
    }
    Ok(events)
}

/// Lowercases and collapses every whitespace run to a single space.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotLexicon {
    middled: BTreeSet<String>,
    left_alone: BTreeSet<String>,
}

impl ShotLexicon {
    pub fn new<I, J, S, T>(middled: I, left_alone: J) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let middled = normalize_phrases(middled, "middled")?;
        let left_alone = normalize_phrases(left_alone, "left_alone")?;
        if let Some(shared) = middled.intersection(&left_alone).next() {
            return Err(CorpusError::InvalidLexicon(format!(
                "phrase {shared:?} is listed as both middled and left alone"
            )));
        }
        Ok(ShotLexicon {
            middled,
            left_alone,
        })
    }

    pub fn middled(&self) -> impl Iterator<Item = &str> {
        self.middled.iter().map(String::as_str)
    }

    pub fn left_alone(&self) -> impl Iterator<Item = &str> {
        self.left_alone.iter().map(String::as_str)
    }
}

fn normalize_phrases<I, S>(phrases: I, set: &str) -> Result<BTreeSet<String>, CorpusError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = BTreeSet::new();
    for phrase in phrases {
        let normalized = normalize_text(phrase.as_ref());
        if normalized.is_empty() {
            return Err(CorpusError::InvalidLexicon(format!(
                "empty phrase in {set} set"
            )));
        }
        out.insert(normalized);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeatherLexicon {
    // Longest phrase first, ties alphabetical.
    phrases: Vec<(String, WeatherCategory)>,
}

impl WeatherLexicon {
    pub fn new<I, S>(entries: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (S, WeatherCategory)>,
        S: AsRef<str>,
    {
        let mut map: BTreeMap<String, WeatherCategory> = BTreeMap::new();
        for (phrase, category) in entries {
            let normalized = normalize_text(phrase.as_ref());
            if normalized.is_empty() {
                return Err(CorpusError::InvalidLexicon("empty weather phrase".into()));
            }
            if let Some(previous) = map.insert(normalized.clone(), category) {
                if previous != category {
                    return Err(CorpusError::InvalidLexicon(format!(
                        "weather phrase {normalized:?} maps to both {previous} and {category}"
                    )));
                }
            }
        }
        let mut phrases: Vec<_> = map.into_iter().collect();
        phrases.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(WeatherLexicon { phrases })
    }

    pub fn phrases(&self) -> impl Iterator<Item = (&str, WeatherCategory)> {
        self.phrases.iter().map(|(p, c)| (p.as_str(), *c))
    }
}

/// Shot and weather lexicons as stored in the lexicon JSON file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub shots: ShotLexicon,
    pub weather: WeatherLexicon,
}

#[derive(Serialize, Deserialize)]
struct LexiconFile {
    middled: Vec<String>,
    left_alone: Vec<String>,
    weather: BTreeMap<String, WeatherCategory>,
}

impl Lexicon {
    pub fn from_json(json: &str) -> Result<Self, CorpusError> {
        let file: LexiconFile =
            serde_json::from_str(json).map_err(|e| CorpusError::InvalidLexicon(e.to_string()))?;
        Ok(Lexicon {
            shots: ShotLexicon::new(&file.middled, &file.left_alone)?,
            weather: WeatherLexicon::new(file.weather)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| CorpusError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }

    pub fn to_json(&self) -> String {
        let file = LexiconFile {
            middled: self.shots.middled.iter().cloned().collect(),
            left_alone: self.shots.left_alone.iter().cloned().collect(),
            weather: self.weather.phrases.iter().cloned().collect(),
        };
        serde_json::to_string_pretty(&file).expect("lexicon serializes")
    }
}

/// Classifies a delivery by case-insensitive substring search.
///
/// A left-alone phrase wins over a middled phrase when both occur.
pub fn classify_shot(event: &DeliveryEvent, lexicon: &ShotLexicon) -> ShotClass {
    classify_text(&event.text, lexicon)
}

pub fn classify_text(text: &str, lexicon: &ShotLexicon) -> ShotClass {
    let text = normalize_text(text);
    if lexicon.left_alone.iter().any(|p| text.contains(p.as_str())) {
        ShotClass::LeftAlone
    } else if lexicon.middled.iter().any(|p| text.contains(p.as_str())) {
        ShotClass::Middled
    } else {
        ShotClass::Uncontrolled
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ShotTally {
    pub middled: u32,
    pub left_alone: u32,
    pub balls_faced: u32,
}

impl ShotTally {
    pub fn uncontrolled(&self) -> u32 {
        self.balls_faced - self.middled - self.left_alone
    }

    pub fn record(&mut self, class: ShotClass) {
        self.balls_faced += 1;
        match class {
            ShotClass::Middled => self.middled += 1,
            ShotClass::LeftAlone => self.left_alone += 1,
            ShotClass::Uncontrolled => {}
        }
    }
}

pub fn tally_innings(
    events: &[DeliveryEvent],
    lexicon: &ShotLexicon,
) -> Result<ShotTally, CorpusError> {
    if events.is_empty() {
        return Err(CorpusError::EmptyInnings);
    }
    let mut tally = ShotTally::default();
    for event in events {
        tally.record(classify_shot(event, lexicon));
    }
    Ok(tally)
}

/// Controlled deliveries (middled plus left alone) over balls faced.
pub fn compute_control(tally: &ShotTally) -> Result<f64, CorpusError> {
    if tally.balls_faced == 0 {
        return Err(CorpusError::ZeroBallsFaced);
    }
    Ok(f64::from(tally.middled + tally.left_alone) / f64::from(tally.balls_faced))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeatherReading {
    pub category: WeatherCategory,
    /// No phrase matched and the category fell back to `Clear`.
    pub defaulted: bool,
}

pub fn extract_weather(prematch_text: &str, lexicon: &WeatherLexicon) -> WeatherReading {
    let text = normalize_text(prematch_text);
    lexicon
        .phrases
        .iter()
        .find(|(phrase, _)| text.contains(phrase.as_str()))
        .map(|(_, category)| WeatherReading {
            category: *category,
            defaulted: false,
        })
        .unwrap_or(WeatherReading {
            category: WeatherCategory::Clear,
            defaulted: true,
        })
}

/// Mean absolute relative deviation, in percent, of calculated control
/// values from published ones.
pub fn validate_against_published(calculated: &[f64], actual: &[f64]) -> Result<f64, CorpusError> {
    if calculated.len() != actual.len() {
        return Err(CorpusError::LengthMismatch {
            calculated: calculated.len(),
            actual: actual.len(),
        });
    }
    if actual.is_empty() {
        return Err(CorpusError::EmptySeries);
    }
    if let Some((index, &value)) = actual
        .iter()
        .enumerate()
        .find(|(_, v)| v.is_nan() || **v <= 0.0)
    {
        return Err(CorpusError::NonPositiveActual { index, value });
    }
    let total: f64 = calculated
        .iter()
        .zip(actual)
        .map(|(c, a)| (c - a).abs() / a)
        .sum();
    Ok(total / actual.len() as f64 * 100.0)
}
