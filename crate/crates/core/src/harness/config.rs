use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::estimation::MapOptions;
use crate::fisher::FisherEngine;
use crate::planner::PlannerConfig;
use crate::scenarios::{scenario, ScenarioKind, ScenarioSpec};

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub k_max: usize,
    pub engine: FisherEngine,
    pub planner: PlannerConfig,
    pub map: MapOptions,
    pub scenario: ScenarioSpec,
}

impl RunConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            seed: 0,
            k_max: 10,
            engine: FisherEngine::contact_aware(),
            planner: PlannerConfig::default(),
            map: MapOptions::default(),
            scenario: scenario(kind),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if self.map.max_iters == 0 || !(self.map.tol > 0.0) {
            return Err(Error::Config("MAP options need max_iters ≥ 1 and tol > 0".into()));
        }
        self.engine.validate()?;
        self.planner.validate()?;
        self.scenario.validate()
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Applies a partial TOML document on top of the defaults for `kind`.
    /// Without `kind` the base scenario is taken from `scenario.name` in the document.
    pub fn from_overrides(kind: Option<ScenarioKind>, overrides: &str) -> Result<Self> {
        let patch: Table = toml::from_str(overrides)?;
        let named = patch
            .get("scenario")
            .and_then(|s| s.get("name"))
            .and_then(Value::as_str)
            .map(str::parse::<ScenarioKind>)
            .transpose()?;
        let kind = match (kind, named) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!("config is for scenario {b}, requested {a}")));
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(Error::Config("no scenario given".into())),
        };
        let mut base: Table = toml::from_str(&RunConfig::new(kind).to_toml()?)?;
        merge_toml(&mut base, patch);
        let cfg: RunConfig = Value::Table(base).try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Recursively merges `patch` into `base`; non-table values replace.
pub fn merge_toml(base: &mut Table, patch: Table) {
    for (key, value) in patch {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(p)) => merge_toml(b, p),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
