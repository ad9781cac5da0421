use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Scenario;
use crate::theory::MacDesign;

pub const SCHEMA_VERSION: u32 = 1;

/// A scenario file: the scenario plus how to run and where to write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub name: String,
    #[serde(default = "one")]
    pub seeds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    pub scenario: Scenario,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Schema and scenario checks; returns the resolved design.
    pub fn validate(&self) -> Result<MacDesign> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema {} (this build reads schema {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be >= 1".into()));
        }
        // TOML integers are signed
        let last_seed = self.scenario.seed.checked_add(self.seeds as u64 - 1);
        if last_seed.is_none_or(|s| s > i64::MAX as u64) {
            return Err(Error::Config(format!(
                "seed {} (+{} more) must stay below 2^63",
                self.scenario.seed,
                self.seeds - 1
            )));
        }
        self.scenario.validate()
    }
}
