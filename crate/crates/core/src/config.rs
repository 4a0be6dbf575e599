//! Run configuration file.
//!
//! A single TOML document with one table per experiment. Every key is
//! optional; missing keys take the built-in defaults, and unknown keys are
//! rejected with the line they appear on.
//!
//! ```toml
//! [brake]
//! initial_speed = 8.13
//! initial_ped_distance = 25.0
//!
//! [brake.gains]
//! k_p = 0.8
//! k_d = 0.1
//! k_inner = 10000.0
//!
//! [brake.noise]          # presence enables range noise
//! sigma_slope = 0.04
//!
//! [sweep]
//! kp_values = [0.4, 0.6, 0.8]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::PdGains;
use crate::error::{Error, Result};
use crate::scenarios::{CharacterizationConfig, LateralScenarioConfig, ScenarioConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub brake: ScenarioConfig,
    pub sweep: SweepConfig,
    pub lateral: LateralScenarioConfig,
    pub characterize: CharacterizationConfig,
    pub analyze: AnalyzeConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Outer-gain sweep. Runs share the `[brake]` settings except for the
/// starting range, which is set far enough out that every swept gain
/// starts braking after t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub kp_values: Vec<f64>,
    pub initial_ped_distance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kp_values: vec![0.4, 0.6, 0.8],
            initial_ped_distance: 40.0,
        }
    }
}

impl SweepConfig {
    pub fn base(&self, brake: &ScenarioConfig) -> ScenarioConfig {
        ScenarioConfig {
            initial_ped_distance: self.initial_ped_distance,
            label: "sweep".into(),
            ..brake.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub gains: PdGains,
    pub mass: f64,
    /// Reference ramp slope for the velocity-error bound, m/s^2.
    pub ramp_slope: f64,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            gains: PdGains::braking_default(),
            mass: 1725.0,
            ramp_slope: 1.0,
        }
    }
}
