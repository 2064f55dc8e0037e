//! Helpers shared by the CLI test targets.
#![allow(dead_code)]

mod data;

use std::path::PathBuf;
use std::process::{Command, Output};

pub use data::*;

/// Path of the `impact` binary built for this test run.
pub fn impact_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_impact"))
}

pub fn run_impact(args: &[&str]) -> Output {
    Command::new(impact_bin())
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn impact binary")
}
