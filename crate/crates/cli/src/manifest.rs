//! JSON experiment manifests. A manifest is translated into command-line
//! arguments and parsed by the same definitions as a direct invocation.
//!
//! ```json
//! {
//!   "command": "table1",
//!   "seed": 7,
//!   "output_dir": "out/table1",
//!   "node_count": 96,
//!   "restarts": 8,
//!   "constants": { "c_G": 1.27 },
//!   "parameters": { "family": "full", "row": ["9:pi:0.5", "9:pi/15:pi/20"] }
//! }
//! ```

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const COMMANDS: [&str; 6] = ["optimize", "scan", "scaling", "table1", "mc", "fit-constants"];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantOverrides {
    #[serde(rename = "c_G")]
    pub c_g: Option<f64>,
    #[serde(rename = "c_N")]
    pub c_n: Option<f64>,
    pub c_rho: Option<f64>,
    pub boundary: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub node_count: Option<usize>,
    pub restarts: Option<usize>,
    pub hops: Option<usize>,
    pub threads: Option<usize>,
    pub enumeration_cap: Option<u64>,
    #[serde(default)]
    pub constants: ConstantOverrides,
}

/// Parsed manifest together with its source text.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: Manifest,
    pub text: String,
    pub name: String,
}

impl LoadedManifest {
    pub fn parse(name: &str, text: &str) -> CliResult<Self> {
        let manifest: Manifest = serde_json::from_str(text).map_err(|e| CliError::Invalid {
            key: None,
            message: format!("{name}:{}:{}: {e}", e.line(), e.column()),
        })?;
        let this = Self {
            manifest,
            text: text.to_string(),
            name: name.to_string(),
        };
        if !COMMANDS.contains(&this.manifest.command.as_str()) {
            return Err(this.error_at(
                Some("command"),
                &format!(
                    "unknown command '{}'; expected one of {}",
                    this.manifest.command,
                    COMMANDS.join(", ")
                ),
            ));
        }
        Ok(this)
    }

    /// 1-based line of the first occurrence of `"key"`, preferring the
    /// parameters block.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        let candidates = [key.to_string(), key.replace('_', "-"), key.replace('-', "_")];
        let start = self.text.find("\"parameters\"").unwrap_or(0);
        let find = |from: usize| {
            candidates
                .iter()
                .filter_map(|k| self.text[from..].find(&format!("\"{k}\"")).map(|i| i + from))
                .min()
        };
        let at = find(start).or_else(|| find(0))?;
        Some(self.text[..at].matches('\n').count() + 1)
    }

    /// Error message prefixed with the manifest name and the line of `key`.
    pub fn error_at(&self, key: Option<&str>, message: &str) -> CliError {
        let line = key.and_then(|k| self.line_of(k)).unwrap_or(1);
        let what = key.map(|k| format!("'{k}': ")).unwrap_or_default();
        CliError::Invalid {
            key: key.map(str::to_string),
            message: format!("{}:{line}: {what}{message}", self.name),
        }
    }

    /// Equivalent argument vector, program name first.
    pub fn to_args(&self) -> CliResult<Vec<String>> {
        let m = &self.manifest;
        let mut args = vec!["phasest".to_string()];
        let mut push = |flag: &str, v: Option<String>| {
            if let Some(v) = v {
                args.push(format!("--{flag}={v}"));
            }
        };
        push("seed", m.seed.map(|v| v.to_string()));
        push("out", m.output_dir.as_ref().map(|p| p.display().to_string()));
        push("node-count", m.node_count.map(|v| v.to_string()));
        push("restarts", m.restarts.map(|v| v.to_string()));
        push("hops", m.hops.map(|v| v.to_string()));
        push("threads", m.threads.map(|v| v.to_string()));
        push("enumeration-cap", m.enumeration_cap.map(|v| v.to_string()));
        push("c-g", m.constants.c_g.map(|v| v.to_string()));
        push("c-n", m.constants.c_n.map(|v| v.to_string()));
        push("c-rho", m.constants.c_rho.map(|v| v.to_string()));
        push("boundary", m.constants.boundary.map(|v| v.to_string()));
        args.push(m.command.clone());
        // keys arrive sorted; clap does not care about order
        for (key, value) in &m.parameters {
            let flag = format!("--{}", key.replace('_', "-"));
            let scalar = |v: &Value| -> CliResult<String> {
                match v {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    _ => Err(self.error_at(Some(key), "expected a string or number")),
                }
            };
            match value {
                Value::Null | Value::Bool(false) => {}
                Value::Bool(true) => args.push(flag),
                // `--flag=value` keeps negative numbers from reading as flags
                Value::Array(items) => {
                    for item in items {
                        args.push(format!("{flag}={}", scalar(item)?));
                    }
                }
                Value::Object(_) => return Err(self.error_at(Some(key), "nested objects are not parameters")),
                v => args.push(format!("{flag}={}", scalar(v)?)),
            }
        }
        Ok(args)
    }
}
