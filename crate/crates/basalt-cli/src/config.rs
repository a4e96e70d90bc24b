//! Optional TOML config file: a flat table of defaults that explicit
//! command-line flags override.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub algo: Option<String>,
    pub n: Option<String>,
    pub f: Option<String>,
    pub v: Option<String>,
    pub rho: Option<String>,
    pub k: Option<usize>,
    pub force: Option<String>,
    pub ticks: Option<u64>,
    pub seeds: Option<String>,
    pub f0: Option<f64>,
    pub bootstrap_size: Option<usize>,
    pub metrics_interval: Option<u64>,
    pub workers: Option<usize>,
    pub grid_cap: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Pick the first present value: explicit flag, config file, default.
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
