//! Regenerates the synthetic sample dataset under `fixtures/sample`.
//!
//! ```text
//! cargo run -p impact-cli --example make_fixture [-- <output dir>]
//! ```

#[allow(dead_code)]
#[path = "../tests/support/data.rs"]
mod support;

use std::path::PathBuf;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| support::repo_root().join("fixtures/sample"));
    let players = ["Asha Rao", "Ben Carter", "Chen Wei"];
    let innings = support::write_raw_dataset(&dir, &players, 30, 2024);
    std::fs::write(
        dir.join("config.toml"),
        "seed = 42\ntest_fraction = 0.25\nplayers = [\"Asha Rao\", \"Ben Carter\", \"Chen Wei\"]\n\n[paths]\nmatch_csv = \"matches.csv\"\n\
         commentary_dir = \"commentary\"\nlexicon = \"../../data/lexicon.json\"\noutput_dir = \"out\"\n",
    )
    .expect("write config");
    println!("wrote {} innings to {}", innings.len(), dir.display());
}
