//! Synthetic derived tables and raw commentary datasets.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const DERIVED_HEADER: [&str; 13] = [
    "match_id",
    "player",
    "Dot Ball",
    "Opposition Index",
    "Out/NotOut",
    "Others",
    "Team Run",
    "In At Position",
    "Pitch Index",
    "Home/Away",
    "Win/Loss",
    "Weather",
    "impact",
];

const HOME_AWAY: [&str; 3] = ["Away", "Home", "Neutral"];
const WIN_LOSS: [&str; 4] = ["Draw", "Loss", "No Result", "Win"];
const WEATHER: [&str; 4] = ["Clear", "Overcast", "Sunny", "Windy"];
const PITCH_INDEX: [f64; 3] = [1.0, 1.5, 2.0];

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("repository root")
}

pub fn lexicon_path() -> PathBuf {
    repo_root().join("data/lexicon.json")
}

/// One synthetic row of the ten model features before encoding.
#[derive(Debug, Clone)]
pub struct RawFeatures {
    pub dot_ball: f64,
    pub opposition_index: f64,
    pub not_out: bool,
    pub others: f64,
    pub team_run: f64,
    pub in_at_position: f64,
    pub pitch_index: f64,
    pub home_away: usize,
    pub win_loss: usize,
    pub weather: usize,
}

impl RawFeatures {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        RawFeatures {
            dot_ball: rng.gen_range(0..=70) as f64,
            opposition_index: rng.gen_range(1..=5) as f64,
            not_out: rng.gen_bool(0.2),
            others: rng.gen_range(0..=80) as f64,
            team_run: rng.gen_range(120..=380) as f64,
            in_at_position: rng.gen_range(1..=6) as f64,
            pitch_index: *PITCH_INDEX.choose(rng).unwrap(),
            home_away: rng.gen_range(0..3),
            win_loss: rng.gen_range(0..4),
            weather: rng.gen_range(0..4),
        }
    }

    /// The eighteen encoded columns, in model-matrix order.
    pub fn encoded(&self) -> Vec<f64> {
        let mut v = vec![
            self.dot_ball,
            self.opposition_index,
            if self.not_out { 1.0 } else { 0.0 },
            self.others,
            self.team_run,
            self.in_at_position,
            self.pitch_index,
        ];
        v.extend((0..3).map(|i| f64::from(u8::from(i == self.home_away))));
        v.extend((0..4).map(|i| f64::from(u8::from(i == self.win_loss))));
        v.extend((0..4).map(|i| f64::from(u8::from(i == self.weather))));
        v
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.dot_ball.to_string(),
            self.opposition_index.to_string(),
            if self.not_out { "NotOut" } else { "Out" }.to_string(),
            self.others.to_string(),
            self.team_run.to_string(),
            self.in_at_position.to_string(),
            self.pitch_index.to_string(),
            HOME_AWAY[self.home_away].to_string(),
            WIN_LOSS[self.win_loss].to_string(),
            WEATHER[self.weather].to_string(),
        ]
    }
}

/// Weights over the encoded columns used to synthesize `impact`.
pub const TRUE_WEIGHTS: [f64; 18] = [
    -0.6, 4.0, 9.0, 1.3, 0.08, -3.5, -6.0, -2.0, 3.0, 0.5, 1.0, -4.0, 0.0, 5.0, 2.0, -3.0, 1.5,
    -1.0,
];
pub const TRUE_INTERCEPT: f64 = 25.0;

/// Rows whose label is linear in the encoded features plus Gaussian noise with
/// standard deviation `noise_fraction * std(signal)`.
pub fn linear_rows(n: usize, noise_fraction: f64, rng: &mut ChaCha8Rng) -> Vec<(RawFeatures, f64)> {
    let raw: Vec<RawFeatures> = (0..n).map(|_| RawFeatures::random(rng)).collect();
    let signal: Vec<f64> = raw
        .iter()
        .map(|r| {
            TRUE_INTERCEPT
                + r.encoded()
                    .iter()
                    .zip(TRUE_WEIGHTS)
                    .map(|(x, w)| x * w)
                    .sum::<f64>()
        })
        .collect();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let std = (signal.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let sigma = noise_fraction * std;
    let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).unwrap());
    raw.into_iter()
        .zip(signal)
        .map(|(r, s)| {
            let e = noise.as_ref().map_or(0.0, |d| d.sample(rng));
            (r, s + e)
        })
        .collect()
}

/// Renders rows as a derived-feature CSV for `player`.
pub fn derived_csv(player: &str, rows: &[(RawFeatures, f64)]) -> String {
    let mut out = DERIVED_HEADER.join(",");
    out.push('\n');
    for (i, (raw, impact)) in rows.iter().enumerate() {
        let mut cells = vec![format!("{}-{:04}", stem(player), i + 1), player.to_string()];
        cells.extend(raw.cells());
        cells.push(impact.to_string());
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

pub fn stem(player: &str) -> String {
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

/// Writes a config whose outputs go to `<dir>/out`, with every path relative.
pub fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let lexicon = lexicon_path().canonicalize().expect("lexicon present");
    let text = format!(
        "seed = 42\ntest_fraction = 0.25\n{extra}\n[paths]\nmatch_csv = \"matches.csv\"\n\
         commentary_dir = \"commentary\"\nlexicon = {lexicon:?}\noutput_dir = \"out\"\n",
    );
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Places derived CSVs where the `train` stage expects them.
pub fn write_derived_dataset(
    dir: &Path,
    players: &[&str],
    rows_per_player: usize,
    noise_fraction: f64,
    seed: u64,
) {
    let features = dir.join("out/features");
    fs::create_dir_all(&features).unwrap();
    let mut rng = rand::SeedableRng::seed_from_u64(seed);
    for player in players {
        let rows = linear_rows(rows_per_player, noise_fraction, &mut rng);
        fs::write(
            features.join(format!("{}.csv", stem(player))),
            derived_csv(player, &rows),
        )
        .unwrap();
    }
}

const MIDDLED_LINES: [&str; 5] = [
    "defended solidly back down the pitch",
    "drives firmly and straight past the bowler",
    "controlled push into the covers",
    "swayed out of the line of the bouncer",
    "defended off the back foot",
];
const LEFT_LINES: [&str; 4] = [
    "shoulders arms to the one angling away",
    "ducked under the short ball",
    "no shot offered, well outside off",
    "stepped away and let it go through",
];
const UNCONTROLLED_LINES: [&str; 5] = [
    "edged, falls short of second slip",
    "beaten outside off, feeling for it",
    "mistimes a pull, lands safe at midwicket",
    "top edge flies over the keeper",
    "inside edge onto the pad",
];
const PREMATCH_LINES: [&str; 4] = [
    "Hot and humid at the ground, captain opts to bat.",
    "Cloudy and dark skies overhead, bowling first.",
    "A breezy afternoon, toss won and batting first.",
    "Toss won, they will bat first on a fresh surface.",
];
const OPPOSITIONS: [(&str, u32); 8] = [
    ("Northland", 1),
    ("Eastport", 3),
    ("Westvale", 5),
    ("Southmere", 7),
    ("Highcliff", 9),
    ("Lowmarsh", 11),
    ("Riverton", 13),
    ("Lakeshore", 15),
];
const GROUNDS: [&str; 4] = ["Harbour Oval", "Central Park", "Hill Ground", "Bay Stadium"];
const PITCHES: [&str; 3] = ["Dry", "Flat", "Green"];

/// One innings worth of raw inputs: the commentary CSV, its pre-match sidecar
/// and the match-table row.
pub struct RawInnings {
    pub match_id: String,
    pub commentary: String,
    pub prematch: String,
    pub match_row: Vec<String>,
}

pub const MATCH_HEADER: [&str; 18] = [
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

pub fn raw_innings(player: &str, index: usize, rng: &mut ChaCha8Rng) -> RawInnings {
    let match_id = format!("{}-{:03}", stem(player), index + 1);
    let surname = player.split_whitespace().last().unwrap_or(player);
    let balls = rng.gen_range(6..=110u32);
    let p_mid = rng.gen_range(0.35..0.7);
    let p_left = rng.gen_range(0.05..0.2);
    let mut commentary = String::from("over_ball,runs,commentary\n");
    let (mut runs, mut fours, mut sixes, mut dots) = (0u32, 0u32, 0u32, 0u32);
    let start_over = rng.gen_range(0..20u32);
    for b in 0..balls {
        let u: f64 = rng.gen();
        let (line, scored) = if u < p_mid {
            let r = *[0, 0, 1, 1, 1, 2, 4, 4, 6].choose(rng).unwrap();
            (*MIDDLED_LINES.choose(rng).unwrap(), r)
        } else if u < p_mid + p_left {
            (*LEFT_LINES.choose(rng).unwrap(), 0)
        } else {
            let r = *[0, 0, 0, 1, 1, 2, 4].choose(rng).unwrap();
            (*UNCONTROLLED_LINES.choose(rng).unwrap(), r)
        };
        runs += scored;
        match scored {
            0 => dots += 1,
            4 => fours += 1,
            6 => sixes += 1,
            _ => {}
        }
        let token = if scored == 0 {
            "•".to_string()
        } else {
            scored.to_string()
        };
        let what = match scored {
            0 => "no run".to_string(),
            1 => "1 run".to_string(),
            r => format!("{r} runs"),
        };
        writeln!(
            commentary,
            "{}.{},{},\"Bowler to {surname}, {what} {line}\"",
            start_over + b / 6,
            b % 6 + 1,
            token
        )
        .unwrap();
    }
    let (opposition, rank) = *OPPOSITIONS.choose(rng).unwrap();
    let date = format!(
        "20{:02}-{:02}-{:02}",
        10 + index / 12 % 12,
        index % 12 + 1,
        rng.gen_range(1..=28)
    );
    let home_away = ["Home", "Home", "Away", "Away", "Neutral"]
        .choose(rng)
        .unwrap();
    let win_loss = ["Win", "Win", "Loss", "Loss", "No Result", "Draw"]
        .choose(rng)
        .unwrap();
    let match_row = vec![
        match_id.clone(),
        player.to_string(),
        date,
        GROUNDS.choose(rng).unwrap().to_string(),
        opposition.to_string(),
        rank.to_string(),
        runs.to_string(),
        balls.to_string(),
        format!("{:.2}", f64::from(runs) / f64::from(balls) * 100.0),
        fours.to_string(),
        sixes.to_string(),
        format!("{:.2}", f64::from(dots) / f64::from(balls) * 100.0),
        if rng.gen_bool(0.8) { "Out" } else { "NotOut" }.to_string(),
        home_away.to_string(),
        win_loss.to_string(),
        (runs + rng.gen_range(100..=260)).to_string(),
        rng.gen_range(1..=4u32).to_string(),
        PITCHES.choose(rng).unwrap().to_string(),
    ];
    RawInnings {
        match_id,
        commentary,
        prematch: PREMATCH_LINES.choose(rng).unwrap().to_string(),
        match_row,
    }
}

/// Writes `matches.csv` and `commentary/` for a raw-input pipeline run.
pub fn write_raw_dataset(
    dir: &Path,
    players: &[&str],
    innings_per_player: usize,
    seed: u64,
) -> Vec<RawInnings> {
    let commentary_dir = dir.join("commentary");
    fs::create_dir_all(&commentary_dir).unwrap();
    let mut rng = rand::SeedableRng::seed_from_u64(seed);
    let mut all = Vec::new();
    for player in players {
        for i in 0..innings_per_player {
            all.push(raw_innings(player, i, &mut rng));
        }
    }
    let mut writer = csv::Writer::from_path(dir.join("matches.csv")).unwrap();
    writer.write_record(MATCH_HEADER).unwrap();
    for innings in &all {
        writer.write_record(&innings.match_row).unwrap();
        fs::write(
            commentary_dir.join(format!("{}.csv", innings.match_id)),
            &innings.commentary,
        )
        .unwrap();
        fs::write(
            commentary_dir.join(format!("{}.prematch.txt", innings.match_id)),
            &innings.prematch,
        )
        .unwrap();
    }
    writer.flush().unwrap();
    all
}
