//! Run configuration: structure, training and codebook settings in one
//! JSON document. Every field is optional and defaults to the values
//! below.
//!
//! ```text
//! {
//!   "structure": { "T": 3, "grid": [2, 2], "m": 4, "rho": 15,
//!                  "part_w": 60, "part_h": 60,
//!                  "sigma": [-2, 2, -4, 4, -6, 6, -8, 8, -10, 10],
//!                  "H": 5, "near_radius": 90.0,
//!                  "search_radius": 30, "search_stride": 10 },
//!   "train": { "c": 0.003, "max_iters": 30, "energy_tol": 1e-4,
//!              "cutting_plane_tol": 1e-3, "max_cutting_plane_rounds": 1000,
//!              "create_budget": 1, "remove_budget": 1,
//!              "min_cluster_size": 3, "seed": 0 },
//!   "codebook_size": 300
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::TrainConfig;
use crate::model::Structure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub structure: Structure,
    pub train: TrainConfig,
    /// Number of visual words when a codebook is built.
    pub codebook_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { structure: Structure::default(), train: TrainConfig::default(), codebook_size: 300 }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.structure.validate()?;
        self.train.validate()?;
        if self.codebook_size == 0 {
            return Err(Error::argument("codebook_size must be >= 1"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::argument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::argument(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.structure.segments, 3);
        assert_eq!(c.structure.cells(), 4);
        assert_eq!(c.structure.m, 4);
        assert_eq!(c.structure.steps.len(), 10);
        assert_eq!(c.train.c, 0.003);
        assert_eq!(c.codebook_size, 300);
        assert_eq!(RunConfig::from_json("{}").unwrap(), c);
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn partial_and_invalid() {
        let c = RunConfig::from_json(r#"{"structure": {"T": 2}, "train": {"c": 1.0}}"#).unwrap();
        assert_eq!(c.structure.segments, 2);
        assert_eq!(c.structure.grid, [2, 2]);
        assert_eq!(c.train.c, 1.0);
        assert!(RunConfig::from_json(r#"{"structure": {"T": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"typo": 1}"#).unwrap_err().is_usage());
    }
}
