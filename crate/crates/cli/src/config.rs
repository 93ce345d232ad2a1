use std::path::{Path, PathBuf};

use lakeopt_core::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT: &str = "lakeopt-out";

/// Settings read from `--config`. Every key is optional; flags win over the
/// file. `seed` is the master seed from which all component seeds derive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CliConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub synth_years: usize,
    pub surface_resolution: usize,
    pub surface_fixed_value: f64,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            input: None,
            out: None,
            synth_years: 19,
            surface_resolution: 21,
            surface_fixed_value: 0.5,
            pipeline: PipelineConfig::default().with_seed(DEFAULT_SEED),
        }
    }
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Input(format!("invalid config {}: {e}", path.display())))
    }

    pub fn input(&self) -> Result<&Path, Failure> {
        self.input.as_deref().ok_or_else(|| {
            Failure::Input("no input file: pass --input or set \"input\" in the config".into())
        })
    }

    pub fn out(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn seed(&self) -> u64 {
        self.pipeline.seed
    }
}
