//! Run configuration, loadable from TOML. A config file reproduces a run exactly.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::generator::GenSpec;
use crate::harness::{CheckSet, FrameSelection};
use crate::scheduler::DEFAULT_ROUND_FACTOR;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    pub dir: PathBuf,
    #[serde(flatten)]
    pub selection: FrameSelection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Either the text form (`"rectangle:10x10"`) or a table with a `family` key.
    #[serde(with = "gen_field")]
    pub gen: GenSpec,
    /// Round budget; defaults to `30 · n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u64>,
    #[serde(default)]
    pub checks: CheckSet,
    /// Keep positions of every round in the trace (needed for rendering).
    #[serde(default = "yes")]
    pub frames: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub render: Option<RenderConfig>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: {0}")]
    Write(#[from] toml::ser::Error),
}

impl RunConfig {
    pub fn new(gen: GenSpec) -> Self {
        RunConfig {
            gen,
            max_rounds: None,
            checks: CheckSet::all(),
            frames: true,
            trace: None,
            render: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Budget for a chain of `n` robots.
    pub fn budget(&self, n: usize) -> u64 {
        self.max_rounds.unwrap_or(DEFAULT_ROUND_FACTOR * n.max(1) as u64)
    }
}

mod gen_field {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::generator::GenSpec;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Table(GenSpec),
    }

    pub fn serialize<S: Serializer>(spec: &GenSpec, s: S) -> Result<S::Ok, S::Error> {
        if spec.has_text_form() {
            s.serialize_str(&spec.to_string())
        } else {
            spec.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GenSpec, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Repr::Table(spec) => Ok(spec),
        }
    }
}
