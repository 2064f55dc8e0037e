mod support;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use support::{run_impact, write_config, write_derived_dataset, write_raw_dataset};

const PLAYERS: [&str; 2] = ["Asha Rao", "Ben Carter"];
const STAGES: [&str; 4] = ["parse-commentary", "build-features", "train", "correlate"];

fn run_ok(args: &[&str]) -> String {
    let out = run_impact(args);
    assert!(
        out.status.success(),
        "impact {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_err(args: &[&str]) -> String {
    let out = run_impact(args);
    assert!(
        !out.status.success(),
        "impact {args:?} unexpectedly succeeded"
    );
    String::from_utf8(out.stderr).unwrap()
}

fn raw_setup(innings: usize) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    write_raw_dataset(dir.path(), &PLAYERS, innings, 11);
    let config = write_config(dir.path(), "");
    (dir, config.to_str().unwrap().to_string())
}

fn all_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .from_path(path)
        .unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn full_pipeline_from_raw_inputs() {
    let (dir, config) = raw_setup(40);
    for stage in STAGES {
        run_ok(&[stage, "--config", &config]);
    }
    let out = dir.path().join("out");

    let control = csv_rows(&out.join("control.csv"));
    assert_eq!(
        control[0][..5],
        [
            "match_id",
            "middled",
            "left_alone",
            "balls_faced",
            "control"
        ]
    );
    assert_eq!(control.len(), 1 + 2 * 40);
    for row in &control[1..] {
        let (m, l, bf): (f64, f64, f64) = (
            row[1].parse().unwrap(),
            row[2].parse().unwrap(),
            row[3].parse().unwrap(),
        );
        let c: f64 = row[4].parse().unwrap();
        assert_eq!(c, (m + l) / bf, "control for {}", row[0]);
    }

    for player in PLAYERS {
        let stem = support::stem(player);
        let features = csv_rows(&out.join(format!("features/{stem}.csv")));
        let header = &features[0];
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        assert_eq!(features.len(), 41);
        for row in &features[1..] {
            let runs: f64 = row[col("Runs")].parse().unwrap();
            let control: f64 = row[col("Control")].parse().unwrap();
            let impact: f64 = row[col("impact")].parse().unwrap();
            assert!((impact - runs * control.exp()).abs() <= 1e-9 * impact.max(1.0));
        }
        assert!(out.join(format!("train/splits/{stem}.json")).exists());
        assert!(out.join(format!("train/scalers/{stem}.json")).exists());
        assert!(out.join(format!("correlation/{stem}.csv")).exists());
        for slug in ["linear", "forest", "svr", "poly", "tree"] {
            assert!(out
                .join(format!("train/models/{stem}/{slug}.json"))
                .exists());
            assert!(out.join(format!("train/series/{stem}_{slug}.csv")).exists());
        }
    }

    let report = csv_rows(&out.join("train/report.csv"));
    assert_eq!(report[0][0], "Regression Model");
    assert_eq!(report.len(), 6);
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let path = entry.unwrap().path();
        let target = to.join(path.file_name().unwrap());
        if path.is_dir() {
            copy_dir(&path, &target);
        } else {
            fs::copy(&path, &target).unwrap();
        }
    }
}

#[test]
fn shipped_sample_fixture_runs() {
    let dir = tempfile::tempdir().unwrap();
    let sample = support::repo_root().join("fixtures/sample");
    for name in ["matches.csv", "commentary"] {
        let from = sample.join(name);
        if from.is_dir() {
            copy_dir(&from, &dir.path().join(name));
        } else {
            fs::copy(&from, dir.path().join(name)).unwrap();
        }
    }
    let shipped = fs::read_to_string(sample.join("config.toml")).unwrap();
    let lexicon = support::lexicon_path();
    let config = dir.path().join("config.toml");
    fs::write(
        &config,
        shipped.replace("../../data/lexicon.json", lexicon.to_str().unwrap()),
    )
    .unwrap();
    let config = config.to_str().unwrap();
    for stage in STAGES {
        run_ok(&[stage, "--config", config]);
    }
    let report = csv_rows(&dir.path().join("out/train/report.csv"));
    assert_eq!(
        report[0],
        [
            "Regression Model",
            "Asha Rao R2 (%)",
            "Ben Carter R2 (%)",
            "Chen Wei R2 (%)",
            "Mean R2 (%)"
        ]
    );
}

#[test]
fn every_output_carries_config_hash_and_seed() {
    let (dir, config) = raw_setup(12);
    for stage in STAGES {
        run_ok(&[stage, "--config", &config, "--seed", "7"]);
    }
    let files = all_files(&dir.path().join("out"));
    let mut hashes = std::collections::BTreeSet::new();
    for (path, bytes) in &files {
        let text = String::from_utf8(bytes.clone()).unwrap();
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => {
                let first = text.lines().next().unwrap();
                let rest = first
                    .strip_prefix("# impact-pipeline config_hash=")
                    .unwrap_or_else(|| panic!("{} lacks the provenance line", path.display()));
                let (hash, seed) = rest.split_once(" seed=").unwrap();
                assert_eq!(seed, "7");
                hashes.insert(hash.to_string());
            }
            Some("json") => {
                let value: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert_eq!(value["seed"], 7, "{}", path.display());
                hashes.insert(value["config_hash"].as_str().unwrap().to_string());
            }
            _ => {}
        }
    }
    assert_eq!(hashes.len(), 1, "one config, one hash: {hashes:?}");
    assert_eq!(hashes.iter().next().unwrap().len(), 16);
}

#[test]
fn rerunning_stages_is_byte_identical() {
    let (dir, config) = raw_setup(15);
    for stage in STAGES {
        run_ok(&[stage, "--config", &config]);
    }
    let first = all_files(&dir.path().join("out"));
    for stage in STAGES {
        run_ok(&[stage, "--config", &config]);
    }
    let second = all_files(&dir.path().join("out"));
    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>()
    );
    for (path, bytes) in &first {
        assert!(
            bytes == &second[path],
            "{} changed between runs",
            path.display()
        );
    }
}

#[test]
fn empty_commentary_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("commentary")).unwrap();
    let config = write_config(dir.path(), "");
    let err = run_err(&["parse-commentary", "--config", config.to_str().unwrap()]);
    assert!(err.contains("no commentary files"), "{err}");
}

#[test]
fn malformed_delivery_row_is_cited() {
    let (dir, config) = raw_setup(3);
    let target = dir.path().join("commentary/Asha_Rao-002.csv");
    let text = fs::read_to_string(&target).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[7] = "3.x,1,\"Bowler to Rao, 1 run defended\"".into();
    fs::write(&target, lines.join("\n")).unwrap();

    let err = run_err(&["parse-commentary", "--config", &config]);
    assert!(err.contains("Asha_Rao-002.csv"), "{err}");
    assert!(err.contains("row 7"), "{err}");
    assert!(!dir.path().join("out/control.csv").exists());
}

#[test]
fn unmatched_match_id_fails_the_join() {
    let (dir, config) = raw_setup(4);
    fs::remove_file(dir.path().join("commentary/Ben_Carter-003.csv")).unwrap();
    run_ok(&["parse-commentary", "--config", &config]);
    let err = run_err(&["build-features", "--config", &config]);
    assert!(err.contains("Ben_Carter-003"), "{err}");
    assert!(err.contains("no commentary control row"), "{err}");
}

#[test]
fn invalid_rows_are_excluded_and_reported() {
    let (dir, config) = raw_setup(10);
    let path = dir.path().join("matches.csv");
    let mut rows = csv_rows(&path);
    let col = |name: &str| rows[0].iter().position(|h| h == name).unwrap();
    let (rank, fours, position) = (col("Opposition Rank"), col("4s"), col("In At Position"));
    rows[1][rank] = "0".into();
    rows[2][fours] = "99".into();
    rows[3][position] = "".into();
    let mut writer = csv::Writer::from_path(&path).unwrap();
    for row in &rows {
        writer.write_record(row).unwrap();
    }
    writer.flush().unwrap();

    run_ok(&["parse-commentary", "--config", &config]);
    let out = run_impact(&["build-features", "--config", &config]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("20 rows in, 17 rows out, 3 excluded"),
        "{stderr}"
    );

    let exclusions = csv_rows(&dir.path().join("out/features/exclusions.csv"));
    assert_eq!(exclusions.len(), 4);
    let ids: Vec<&str> = exclusions[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        ids,
        [
            rows[1][0].as_str(),
            rows[2][0].as_str(),
            rows[3][0].as_str()
        ]
    );
}

#[test]
fn train_reports_missing_player_features() {
    let dir = tempfile::tempdir().unwrap();
    write_derived_dataset(dir.path(), &["Asha Rao"], 40, 0.05, 3);
    let config = write_config(dir.path(), "");
    let err = run_err(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--player",
        "Nobody Here",
    ]);
    assert!(err.contains("Nobody Here"), "{err}");
}

#[test]
fn exactly_linear_data_scores_one_hundred_percent() {
    let dir = tempfile::tempdir().unwrap();
    write_derived_dataset(dir.path(), &["Asha Rao"], 80, 0.0, 5);
    let config = write_config(dir.path(), "");
    let stdout = run_ok(&["train", "--config", config.to_str().unwrap()]);
    let mlr = stdout
        .lines()
        .find(|l| l.starts_with("Multiple Linear"))
        .unwrap();
    assert_eq!(
        mlr.split('\t').collect::<Vec<_>>(),
        ["Multiple Linear", "100.00", "100.00"]
    );

    let report = csv_rows(&dir.path().join("out/train/report.csv"));
    assert_eq!(
        report[0],
        ["Regression Model", "Asha_Rao R2 (%)", "Mean R2 (%)"]
    );
    assert_eq!(report[1][0], "Multiple Linear");
}

#[test]
fn overrides_change_split_and_scaler_policy() {
    let dir = tempfile::tempdir().unwrap();
    write_derived_dataset(dir.path(), &["Asha Rao"], 60, 0.05, 8);
    let config = write_config(dir.path(), "");
    let config = config.to_str().unwrap();
    let split = |dir: &Path| -> serde_json::Value {
        serde_json::from_str(
            &fs::read_to_string(dir.join("out/train/splits/Asha_Rao.json")).unwrap(),
        )
        .unwrap()
    };

    run_ok(&["train", "--config", config]);
    let base = split(dir.path());
    assert_eq!(base["test"].as_array().unwrap().len(), 15);

    run_ok(&[
        "train",
        "--config",
        config,
        "--seed",
        "43",
        "--test-fraction",
        "0.5",
        "--fit-on-train",
    ]);
    let moved = split(dir.path());
    assert_eq!(moved["test"].as_array().unwrap().len(), 30);
    assert_eq!(moved["seed"], 43);
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out/train/report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["fit_scaler_on_train"], true);
    let scaler: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out/train/scalers/Asha_Rao.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(scaler["fitted_on"], "train");
}

fn write_feature_csv(dir: &Path, stem: &str, body: &str) {
    let features = dir.join("out/features");
    fs::create_dir_all(&features).unwrap();
    fs::write(features.join(format!("{stem}.csv")), body).unwrap();
}

#[test]
fn correlate_two_column_table() {
    let dir = tempfile::tempdir().unwrap();
    write_feature_csv(
        dir.path(),
        "solo",
        "match_id,player,Runs,impact\nm1,solo,10,20.5\nm2,solo,30,50.1\nm3,solo,5,9.9\nm4,solo,70,101.0\n",
    );
    let config = write_config(dir.path(), "");
    run_ok(&["correlate", "--config", config.to_str().unwrap()]);
    let rows = csv_rows(&dir.path().join("out/correlation/solo.csv"));
    assert_eq!(rows[0], ["column", "Runs", "impact"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][1], "1");
    assert_eq!(rows[2][2], "1");
    let r: f64 = rows[1][2].parse().unwrap();
    assert_eq!(rows[1][2], rows[2][1]);
    assert!(r > 0.99 && r <= 1.0);
}

#[test]
fn correlate_single_row_is_too_few() {
    let dir = tempfile::tempdir().unwrap();
    write_feature_csv(
        dir.path(),
        "solo",
        "match_id,player,Runs,impact\nm1,solo,10,20.5\n",
    );
    let config = write_config(dir.path(), "");
    let err = run_err(&["correlate", "--config", config.to_str().unwrap()]);
    assert!(err.to_lowercase().contains("too few"), "{err}");
}

#[test]
fn bad_config_value_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let err = run_err(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--test-fraction",
        "1.5",
    ]);
    assert!(err.contains("test_fraction"), "{err}");
}
