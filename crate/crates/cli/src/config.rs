//! Experiment configuration files.

use std::path::Path;

use levy_prune::{AdmissibleFamily, FamilySpec};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

fn default_sigmas() -> f64 {
    3.0
}

fn default_mass() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// GW resolution `n`; every Monte Carlo estimate is repeated at `2n`.
    pub resolution: u64,
    pub replicates: u64,
    pub seed: u64,
    #[serde(default)]
    pub height_cap: Option<f64>,
    #[serde(default)]
    pub q_grid: Vec<f64>,
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    /// Heights `a` (height and exit laws) or thresholds `epsilon`.
    #[serde(default)]
    pub height_grid: Vec<f64>,
    /// Time at which trees are sampled and marking starts.
    #[serde(default)]
    pub t: f64,
    /// Initial mass of forests under `P_r`.
    #[serde(default = "default_mass")]
    pub r: f64,
    /// Girsanov tilt; each experiment has its own default.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Replicates of the infinite tree in `size_bias`, which costs about
    /// `n^2` nodes per unit of mass; defaults to `replicates`.
    #[serde(default)]
    pub infinite_tree_replicates: Option<u64>,
    #[serde(default = "default_sigmas")]
    pub tolerance_sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    #[serde(default)]
    pub experiment: Option<String>,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| RunError::Config(format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let p = &self.params;
        if p.replicates < 100 {
            return Err(RunError::Config(format!("replicates must be at least 100, got {}", p.replicates)));
        }
        if p.infinite_tree_replicates.is_some_and(|r| r < 100) {
            return Err(RunError::Config("infinite_tree_replicates must be at least 100".into()));
        }
        if p.resolution < 100 {
            return Err(RunError::Config(format!("resolution must be at least 100, got {}", p.resolution)));
        }
        if !(p.tolerance_sigmas > 0.0) {
            return Err(RunError::Config("tolerance_sigmas must be positive".into()));
        }
        let grids = [&p.q_grid, &p.lambda_grid, &p.height_grid];
        if grids.iter().any(|g| g.iter().any(|x| !x.is_finite())) || !p.t.is_finite() {
            return Err(RunError::Config("grids and times must be finite".into()));
        }
        if p.lambda_grid.iter().any(|&l| l < 0.0) || p.height_grid.iter().any(|&a| a <= 0.0) {
            return Err(RunError::Config("need lambda >= 0 and heights > 0".into()));
        }
        if p.height_cap.is_some_and(|h| !(h > 0.0)) || !(p.r > 0.0) {
            return Err(RunError::Config("height_cap and r must be positive".into()));
        }
        self.build_family()?;
        Ok(())
    }

    pub fn build_family(&self) -> Result<AdmissibleFamily, RunError> {
        AdmissibleFamily::from_spec(&self.family).map_err(|e| RunError::Config(format!("invalid family: {e}")))
    }
}
