//! Run manifests.
//!
//! A manifest records everything needed to regenerate an output directory:
//! the subcommand, its fully resolved configuration, the seed, the input
//! paths as given, the files written and the tool version. It deliberately
//! omits timestamps and the output directory itself so that two runs of the
//! same command produce identical bytes wherever they are written.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub config: Value,
    pub inputs: Vec<String>,
    /// Files written next to the manifest, by name.
    pub outputs: Vec<String>,
    /// Equivalent invocation; append `-o <dir>` to rerun.
    pub command: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64, config: impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed,
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            command: Vec::new(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(FILE_NAME);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    #[cfg(test)]
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(FILE_NAME);
        let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("trust", 3, serde_json::json!({"bins": 10})).unwrap();
        m.outputs.push("a.csv".into());
        m.write(dir.path()).unwrap();
        assert_eq!(RunManifest::read(dir.path()).unwrap(), m);
        let text = fs::read_to_string(dir.path().join(FILE_NAME)).unwrap();
        assert!(!text.contains(&*dir.path().to_string_lossy()));
    }
}
