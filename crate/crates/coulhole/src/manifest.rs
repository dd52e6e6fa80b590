//! `run-manifest.json`: everything needed to repeat a run.

use serde::Serialize;

use coulhole_core::constants::{PhysicalConstants, CODATA, CONSTANTS_VERSION};

/// File name written next to every run's outputs.
pub const MANIFEST_NAME: &str = "run-manifest.json";

/// Record of one run. Feeding the file back through `--config` repeats it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    /// Program name.
    pub tool: &'static str,
    /// Program version.
    pub version: &'static str,
    /// Subcommand.
    pub command: String,
    /// Every resolved flag, defaults included.
    pub parameters: serde_json::Map<String, serde_json::Value>,
    /// Label of the constant set.
    pub constants_version: &'static str,
    /// Constant values.
    pub constants: PhysicalConstants,
    /// Random seed, for commands that draw samples.
    pub seed: Option<u64>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// Manifest for `command` with `parameters` in order.
    pub fn new(
        command: &str,
        parameters: &[(String, String)],
        seed: Option<u64>,
        outputs: Vec<String>,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            parameters: parameters
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
            constants_version: CONSTANTS_VERSION,
            constants: CODATA,
            seed,
            outputs,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
