//! File-based run configuration shared by the CLI workflows.
//!
//! The config file is human-editable key-value text (TOML). Unknown keys
//! are rejected; CLI flags override file values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::ExtractionConfig;
use crate::track::TrackerConfig;
use crate::variance::VarianceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub extraction: ExtractionConfig,
    pub variance: VarianceConfig,
    pub tracker: TrackerConfig,
    /// Minimum points for a detection to count as a lane.
    pub min_points: usize,
    /// IoU thresholds evaluated by the eval workflow.
    pub thresholds: Vec<f64>,
    /// Default input directory; CLI flag overrides.
    pub input: Option<String>,
    /// Default output directory; CLI flag overrides.
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            extraction: ExtractionConfig::default(),
            variance: VarianceConfig::default(),
            tracker: TrackerConfig::default(),
            min_points: 3,
            thresholds: vec![0.3, 0.4, 0.5],
            input: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.extraction.validate()?;
        self.tracker.validate()?;
        if self.min_points < 2 {
            return Err(Error::Config("min_points must be >= 2".into()));
        }
        for t in &self.thresholds {
            if !(*t > 0.0 && *t < 1.0) {
                return Err(Error::Config(format!("threshold {t} outside (0, 1)")));
            }
        }
        Ok(())
    }
}
