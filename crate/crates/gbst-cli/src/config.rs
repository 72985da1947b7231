//! The TOML run configuration. Every section is optional except `[data]`
//! for `train`; command-line flags override the corresponding fields.

use std::path::{Path, PathBuf};

use gbst_core::metrics::RiskReduction;
use gbst_core::survival::ObservationGrid;
use gbst_core::tree::SplitMode;
use gbst_core::BoosterParams;
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub data: DataConfig,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub booster: BoosterConfig,
    #[serde(default)]
    pub preprocess: PreprocessSection,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    /// Optional JSON file declaring column kinds; inferred otherwise.
    pub schema: Option<PathBuf>,
    #[serde(default = "default_time_column")]
    pub time_column: String,
    #[serde(default = "default_event_column")]
    pub event_column: String,
}

fn default_time_column() -> String {
    "time".into()
}

fn default_event_column() -> String {
    "event".into()
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: None,
            schema: None,
            time_column: "time".into(),
            event_column: "event".into(),
        }
    }
}

/// Either a uniform grid (`period_count` + `period_length`) or explicit
/// right boundaries.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub period_count: Option<usize>,
    pub period_length: Option<f64>,
    pub boundaries: Option<Vec<f64>>,
}

impl GridConfig {
    pub fn build(&self) -> Result<ObservationGrid> {
        match (&self.boundaries, self.period_count) {
            (Some(b), None) => Ok(ObservationGrid::new(b.clone())?),
            (None, Some(count)) => {
                Ok(ObservationGrid::uniform(count, self.period_length.unwrap_or(1.0))?)
            }
            _ => Err(CliError::Usage(
                "[grid] needs either `boundaries` or `period_count` (not both)".into(),
            )),
        }
    }
}

/// Booster hyperparameters; unset fields fall back to the library defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoosterConfig {
    pub num_trees: Option<usize>,
    pub max_depth: Option<usize>,
    pub learning_rate: Option<f64>,
    pub lambda: Option<f64>,
    pub subsample_rate: Option<f64>,
    pub split_mode: Option<SplitMode>,
    pub min_gain: Option<f64>,
    pub min_child_count: Option<usize>,
    pub rng_seed: Option<u64>,
}

impl BoosterConfig {
    pub fn build(&self, seed_override: Option<u64>) -> BoosterParams {
        let d = BoosterParams::default();
        BoosterParams {
            num_trees: self.num_trees.unwrap_or(d.num_trees),
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            lambda: self.lambda.unwrap_or(d.lambda),
            subsample_rate: self.subsample_rate.unwrap_or(d.subsample_rate),
            split_mode: self.split_mode.unwrap_or(d.split_mode),
            min_gain: self.min_gain.unwrap_or(d.min_gain),
            min_child_count: self.min_child_count.unwrap_or(d.min_child_count),
            rng_seed: seed_override.or(self.rng_seed).unwrap_or(d.rng_seed),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub missing_rate_threshold: f64,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        Self {
            missing_rate_threshold: gbst_core::dataio::PreprocessConfig::default()
                .missing_rate_threshold,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Periods for the decile default-rate tables; defaults to the horizon.
    pub decile_periods: Option<Vec<usize>>,
    pub risk_reduction: Option<RiskReduction>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else { return Ok(RunConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read config {}: {e}", path.display()))
    })?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}
