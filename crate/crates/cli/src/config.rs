//! Run configuration loaded from a TOML file. Every section is optional and
//! falls back to the library defaults.

use std::path::Path;

use anyhow::{Context, Result};
use lobguard::analytics::ResponseGrid;
use lobguard::engine::ObservationConfig;
use lobguard::flow::KernelConfig;
use lobguard::net::TrainConfig;
use lobguard::pipeline::DetectConfig;
use lobguard::sim::{EpisodePlan, SimConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub sim: SimConfig,
    pub episodes: EpisodePlan,
    pub kernel: KernelConfig,
    pub observation: ObservationConfig,
    pub train: TrainConfig,
    pub detect: DetectConfig,
    pub response: ResponseGrid,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Applies a global `--seed` to every seeded component.
    pub fn reseed(&mut self, seed: u64) {
        self.sim.seed = seed;
        self.train.seed = seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: Config = toml::from_str("[sim]\nkappa = 2.5\n[detect]\nthreshold_notional = 1000.0\n").unwrap();
        assert_eq!(cfg.sim.kappa, 2.5);
        assert_eq!(cfg.sim.baseline, SimConfig::default().baseline);
        assert_eq!(cfg.detect.threshold_notional, 1000.0);
        assert_eq!(cfg.train, TrainConfig::default());
    }

    #[test]
    fn unknown_section_is_rejected() {
        assert!(toml::from_str::<Config>("[simulation]\nkappa = 1.0\n").is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let text = toml::to_string(&Config::default()).unwrap();
        assert_eq!(toml::from_str::<Config>(&text).unwrap(), Config::default());
    }
}
