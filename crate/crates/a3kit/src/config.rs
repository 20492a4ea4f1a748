//! Experiment configuration: a TOML file of pipeline knobs.
//!
//! Every knob has a default matching the reference training setup (mask 20%
//! of tokens, beam width 4, a single generation attempt per focal method), so
//! an empty file — or no file at all — runs the standard configuration.
//! Command-line flags override whatever the file says; the `paths` table maps
//! stage names to file locations for the `pipeline` subcommand.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root seed; all stage randomness derives from it.
    pub seed: u64,
    /// Fraction of maskable tokens hidden per pair during corpus prep.
    pub mask_ratio: f64,
    /// Beam width for generation.
    pub beam_width: usize,
    /// Generated candidates kept per focal method.
    pub attempts: usize,
    /// N-gram order of the built-in scoring model.
    pub ngram_order: usize,
    /// Longest generated token sequence, end marker included.
    pub max_len: usize,
    /// Stage name → file path, consulted when a flag does not say otherwise.
    pub paths: BTreeMap<String, PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            mask_ratio: 0.2,
            beam_width: 4,
            attempts: 1,
            ngram_order: 3,
            max_len: 64,
            paths: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    /// Parse and validate a TOML config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|source| Error::ReadInput { path: path.display().to_string(), source })?;
        let config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mask_ratio > 0.0 && self.mask_ratio <= 1.0) {
            return Err(Error::InvalidMaskRatio(self.mask_ratio));
        }
        let positive: [(&str, usize); 4] = [
            ("beam_width", self.beam_width),
            ("attempts", self.attempts),
            ("ngram_order", self.ngram_order),
            ("max_len", self.max_len),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.ngram_order < 2 {
            return Err(Error::InvalidConfig(format!(
                "ngram_order must be at least 2, got {}",
                self.ngram_order
            )));
        }
        Ok(())
    }

    /// Path configured for a stage, if any.
    pub fn path(&self, stage: &str) -> Option<&Path> {
        self.paths.get(stage).map(PathBuf::as_path)
    }
}
