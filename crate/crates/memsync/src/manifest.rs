//! Record of a run, sufficient to repeat it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Resolved inputs in SI units.
    pub params: BTreeMap<String, Value>,
    /// Defaults that applied without being requested.
    pub defaults: BTreeMap<String, Value>,
    /// Present for every stochastic run.
    pub seed: Option<u64>,
    /// Arguments after the program name, minus `--manifest`.
    pub argv: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            params: BTreeMap::new(),
            defaults: BTreeMap::new(),
            seed: None,
            argv,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.params.insert(key.to_string(), to_value(value));
        self
    }

    pub fn default(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.defaults.insert(key.to_string(), to_value(value));
        self
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// `argv` without any `--manifest <path>` or `--manifest=<path>` occurrence.
pub fn strip_manifest_flag(argv: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len());
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
        } else if a == "--manifest" {
            skip = true;
        } else if !a.starts_with("--manifest=") {
            out.push(a.clone());
        }
    }
    out
}
