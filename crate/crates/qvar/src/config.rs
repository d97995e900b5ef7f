//! Experiment configuration: one JSON document with the model, utility,
//! quadrature, simulation, and network sections. Every field has a default,
//! so an empty document reproduces the baseline experimental setup.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{QvarError, Result};
use crate::mc::SimConfig;
use crate::model::ModelParams;
use crate::pinn::PinnConfig;
use crate::quad::QuadratureSpec;
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub utility: UtilitySpec,
    pub quadrature: QuadratureSpec,
    pub sim: SimConfig,
    pub pinn: PinnConfig,
    pub output_dir: PathBuf,
    /// Epsilon grid for sweep commands.
    pub epsilon_grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            utility: UtilitySpec::default(),
            quadrature: QuadratureSpec::default(),
            sim: SimConfig::default(),
            pinn: PinnConfig::default(),
            output_dir: PathBuf::from("out"),
            epsilon_grid: (0..=20).map(|i| i as f64 / 20.0).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.utility.validate()?;
        self.quadrature.validate()?;
        self.sim.validate()?;
        self.pinn.validate()?;
        if (self.model.theta - self.utility.theta).abs() > 1e-12
            || (self.model.floor - self.utility.floor).abs() > 1e-12
        {
            return Err(QvarError::InvalidParameter(
                "model and utility sections disagree on theta or the floor".into(),
            ));
        }
        if self.epsilon_grid.is_empty() {
            return Err(QvarError::InvalidParameter(
                "epsilon_grid must be nonempty".into(),
            ));
        }
        if self
            .epsilon_grid
            .iter()
            .any(|e| !(0.0..=1.0).contains(e))
        {
            return Err(QvarError::InvalidParameter(
                "epsilon_grid entries must lie in [0,1]".into(),
            ));
        }
        Ok(())
    }
}
