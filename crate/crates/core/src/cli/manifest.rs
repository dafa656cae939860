use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::CONFIG_VERSION;
use crate::fields::pfld;
use crate::mikado::CheckRow;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Versions {
    pub crate_version: String,
    pub config_schema: u32,
    pub pfld: u32,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_schema: CONFIG_VERSION,
            pfld: pfld::VERSION,
        }
    }
}

/// Record of one command run. Every path in `outputs` is relative to the output directory.
///
/// `wall_clock_seconds` is the only field that differs between repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Effective config after defaults and the `--seed` override.
    pub config: serde_json::Value,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub versions: Versions,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<CheckRow>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}
