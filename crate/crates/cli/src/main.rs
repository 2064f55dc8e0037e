use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use impact_core::pipeline::{self, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "impact",
    version,
    about = "Batter impact (Effective Runs) pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tally shot control per innings from ball-by-ball commentary files.
    ParseCommentary(Overrides),
    /// Join match rows with control and derive features plus `impact`.
    BuildFeatures(Overrides),
    /// Preprocess, split, fit the five regressors and write the report.
    Train(Overrides),
    /// Pearson correlation matrix over each player's numeric columns.
    Correlate(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one player.
    #[arg(long)]
    player: Option<String>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Fit the scaler on training rows only.
    #[arg(long)]
    fit_on_train: bool,
    /// Keep the label in its original units.
    #[arg(long)]
    no_scale_label: bool,
}

impl Overrides {
    fn load(&self) -> Result<PipelineConfig> {
        let mut config = PipelineConfig::load(&self.config)
            .with_context(|| format!("loading config {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(player) = &self.player {
            config.players = vec![player.clone()];
        }
        if let Some(fraction) = self.test_fraction {
            config.test_fraction = fraction;
        }
        if self.fit_on_train {
            config.fit_scaler_on_train = true;
        }
        if self.no_scale_label {
            config.scale_label = false;
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ParseCommentary(o) => {
            let config = o.load()?;
            let summary = pipeline::parse_commentary(&config)?;
            eprintln!(
                "parsed {} innings; weather defaulted to Clear for {}",
                summary.innings.len(),
                summary.weather_defaulted
            );
            println!("{}", summary.output.display());
        }
        Command::BuildFeatures(o) => {
            let config = o.load()?;
            let summary = pipeline::build_features(&config)?;
            eprintln!(
                "{} rows in, {} rows out, {} excluded",
                summary.rows_in,
                summary.rows_out,
                summary.exclusions.len()
            );
            for e in &summary.exclusions {
                eprintln!("  excluded {} ({}): {}", e.match_id, e.player, e.reason);
            }
            for path in summary.outputs.values() {
                println!("{}", path.display());
            }
        }
        Command::Train(o) => {
            let config = o.load()?;
            let summary = pipeline::train_evaluate(&config)?;
            for row in summary.report.to_table() {
                println!("{}", row.join("\t"));
            }
            for player in &summary.players {
                for warning in &player.warnings {
                    eprintln!("warning [{}]: {warning}", player.player);
                }
            }
            eprintln!("outputs in {}", summary.output.display());
        }
        Command::Correlate(o) => {
            let config = o.load()?;
            for (_, _, path) in pipeline::correlate(&config)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", render_chain(&err));
            ExitCode::FAILURE
        }
    }
}

/// Joins the error chain, skipping causes whose text the previous level
/// already includes.
fn render_chain(err: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut previous = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !previous.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
        previous = text;
    }
    out
}
