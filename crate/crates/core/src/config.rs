//! Fully resolved run configuration, merged from defaults, an optional JSON
//! file and command-line flags (in that order of precedence).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::BaselineConfig;
use crate::error::{Error, Result};
use crate::legibility::Observer;
use crate::planner::FieldConfig;

pub const SEED_ENV: &str = "LEGIFIELD_SEED";
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_sections: usize,
    pub observer: Observer,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_sections: 2,
            observer: Observer::PointPosition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub field: FieldConfig,
    pub baseline: BaselineConfig,
    pub eval: EvalConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            field: FieldConfig::default(),
            baseline: BaselineConfig::default(),
            eval: EvalConfig::default(),
            seed: DEFAULT_SEED,
        }
    }
}

impl RunConfig {
    /// Defaults, with the seed taken from `env_seed` when given.
    pub fn with_env_seed(env_seed: Option<&str>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(raw) = env_seed {
            cfg.seed = raw.trim().parse().map_err(|_| {
                Error::validation(SEED_ENV, format!("`{raw}` is not an unsigned integer"))
            })?;
        }
        Ok(cfg)
    }

    /// Overlays the keys present in a JSON config file onto `self`.
    pub fn merge_file(self, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.merge_json(&text, path)
    }

    pub fn merge_json(self, text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |e: serde_json::Error| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        };
        let overlay: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
        let mut base = serde_json::to_value(self).expect("config serializes");
        merge_values(&mut base, overlay);
        serde_json::from_value(base).map_err(parse_err)
    }
}

fn merge_values(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_values(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
