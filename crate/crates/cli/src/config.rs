//! Defaults for every subcommand, and the run configuration echoed into
//! output headers.

use std::collections::BTreeMap;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// Step budget for the general and odd maps.
pub const MAX_STEPS: u64 = collatz_lab::DEFAULT_MAX_STEPS;
/// Step budget for `an+b` maps. Divergent orbits grow by a constant factor
/// per step, so the budget is kept small.
pub const ANB_MAX_STEPS: u64 = 1_000;

pub const SEED: u64 = 1;
pub const LENGTH: u64 = 100;
pub const SAMPLES: u64 = 14;
pub const LEVEL: &str = "95";

pub const LEMMA7_MAX_K: u32 = 12;
pub const LEMMA7_MULTIPLIERS: u64 = 100;
pub const LEMMA7_MULTIPLIER_BITS: u32 = 20;
pub const VERIFY_MAX_X0: u64 = 10_000;
pub const GEOM_MAX: u32 = 50;
pub const ANB_EQ_MAX_X0: u64 = 1_000;
pub const ANB_EQ_STEPS: usize = 50;
pub const HALFSPLIT_M: u32 = 10;
pub const HALFSPLIT_DIRECT_MAX_LOG2: u32 = 24;
pub const HALFSPLIT_RESIDUE_MAX_M: u32 = 30;

pub const SWEEP_LIMIT: u64 = 1_000_000;
pub const CYCLE_MAX_START: u64 = 99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Everything that determines a run's output. Thread counts are left out:
/// they never change results.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema: String,
    pub command: String,
    pub params: BTreeMap<&'static str, Value>,
    pub format: Format,
    pub output: String,
}

impl RunConfig {
    pub fn new(command: &str, format: Format, output: Option<&Path>) -> Self {
        RunConfig {
            tool: "collatz-lab",
            version: env!("CARGO_PKG_VERSION"),
            schema: format!("collatz-lab/{command}/v{SCHEMA_VERSION}"),
            command: command.to_string(),
            params: BTreeMap::new(),
            format,
            output: output.map_or_else(|| "-".to_string(), |p| p.display().to_string()),
        }
    }

    /// Overrides the schema name for commands with more than one layout.
    pub fn with_schema(mut self, name: &str) -> Self {
        self.schema = format!("collatz-lab/{name}/v{SCHEMA_VERSION}");
        self
    }

    pub fn param(mut self, key: &'static str, value: impl Serialize) -> Self {
        self.params
            .insert(key, serde_json::to_value(value).expect("parameters serialize"));
        self
    }

    /// One-line header for text and CSV output.
    pub fn comment_line(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}={s}"),
                other => format!("{k}={other}"),
            })
            .collect();
        format!(
            "# {} {} {} {}",
            self.tool,
            self.version,
            self.command,
            params.join(" ")
        )
        .trim_end()
        .to_string()
    }
}
