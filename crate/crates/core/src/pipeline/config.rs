use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::regressors::SuiteParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub match_csv: PathBuf,
    pub commentary_dir: PathBuf,
    pub lexicon: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            match_csv: "matches.csv".into(),
            commentary_dir: "commentary".into(),
            lexicon: "lexicon.json".into(),
            output_dir: "out".into(),
        }
    }
}

/// Everything a pipeline run depends on. Loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub seed: u64,
    pub test_fraction: f64,
    /// Fit the scaler on training rows only instead of the whole table.
    pub fit_scaler_on_train: bool,
    /// Standardize the `impact` label along with the features.
    pub scale_label: bool,
    /// Players to train and correlate; empty means every player found.
    pub players: Vec<String>,
    pub models: SuiteParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: Paths::default(),
            seed: 42,
            test_fraction: 0.25,
            fit_scaler_on_train: false,
            scale_label: true,
            players: Vec::new(),
            models: SuiteParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Loads a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_relative_to(base);
        Ok(config)
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        for p in [
            &mut self.paths.match_csv,
            &mut self.paths.commentary_dir,
            &mut self.paths.lexicon,
            &mut self.paths.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(PipelineError::Config(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }

    pub(crate) fn require_path(path: &Path, what: &str) -> Result<(), PipelineError> {
        if path.exists() {
            Ok(())
        } else {
            Err(PipelineError::MissingInput {
                what: what.to_string(),
                path: path.to_path_buf(),
            })
        }
    }
}
