//! Config file layout. Every command-line flag has a key here; flags win over the file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pipeline::PipelineConfig;
use super::scenario::Scenario;
use crate::error::{Error, Result};

/// Architectures and repetitions of a `bench` sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub repetitions: usize,
    /// `(m0, m1)` pairs; the scenario's other fields apply to each.
    pub architectures: Vec<(usize, usize)>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { repetitions: 30, architectures: vec![(30, 3), (30, 9), (45, 5), (45, 23)] }
    }
}

/// ```toml
/// [scenario]
/// activation = "tanh"
/// m0 = 30
/// m1 = 9
///
/// [pipeline]
/// restarts = 500
/// refit = true
///
/// [pipeline.fit]
/// iters = 100000
///
/// [bench]
/// repetitions = 10
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub pipeline: PipelineConfig,
    pub bench: BenchConfig,
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
