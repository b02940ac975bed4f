use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use itpq_core::Tolerances;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Command;

pub const FILE_NAME: &str = "manifest.json";

/// Bumped whenever an output or manifest layout changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &Command,
        seed: Option<u64>,
        tolerances: Tolerances,
        outputs: Vec<String>,
    ) -> Self {
        let mut params = serde_json::to_value(command).expect("commands serialize");
        let subcommand = params
            .as_object_mut()
            .and_then(|m| m.remove("subcommand"))
            .and_then(|v| v.as_str().map(str::to_owned))
            .expect("tagged command");
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand,
            params,
            seed,
            tolerances,
            outputs,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let m: Self = serde_json::from_str(&text)
            .with_context(|| format!("{}: not a run manifest", path.display()))?;
        if m.schema_version != SCHEMA_VERSION {
            bail!(
                "{}: schema version {} (expected {SCHEMA_VERSION})",
                path.display(),
                m.schema_version
            );
        }
        Ok(m)
    }

    /// The recorded command, ready to run again.
    pub fn command(&self) -> Result<Command> {
        let mut params = self.params.clone();
        params
            .as_object_mut()
            .ok_or_else(|| anyhow!("manifest params must be an object"))?
            .insert("subcommand".into(), Value::String(self.subcommand.clone()));
        serde_json::from_value(params).context("manifest params do not match the subcommand")
    }
}
