//! JSON policy configuration: declares specialization points, the
//! exploration policy, window sizes, workload-change thresholds, and the
//! deterministic throughput budget.

use crate::explorer::{
    ExplorationPolicy, DEFAULT_DROP_THRESHOLD, DEFAULT_DROP_WINDOWS,
};
use crate::ir::{PointKind, Value};
use crate::specializer::{PointId, SpecPoint, DEFAULT_UNROLL_CAP};
use serde::{Deserialize, Serialize};

/// A scalar in config files: integers, floats, or booleans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigValue {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl From<ConfigValue> for Value {
    fn from(v: ConfigValue) -> Value {
        match v {
            ConfigValue::Int(i) => Value::Int(i),
            ConfigValue::Float(f) => Value::Float(f),
            ConfigValue::Bool(b) => Value::Bool(b),
        }
    }
}

/// One declared specialization point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub function: String,
    pub variable: String,
    /// "workload" or "config".
    pub kind: String,
    #[serde(default)]
    pub candidates: Option<Vec<ConfigValue>>,
    /// Defaults by kind: workload knobs guard, config knobs do not.
    #[serde(default)]
    pub guard: Option<bool>,
    #[serde(default)]
    pub collection: Option<bool>,
    #[serde(default)]
    pub driver_coupled: bool,
}

impl PointConfig {
    pub fn parse_kind(&self) -> Result<PointKind, String> {
        match self.kind.as_str() {
            "workload" => Ok(PointKind::Workload),
            "config" => Ok(PointKind::Config),
            other => Err(format!(
                "point {}:{}: unknown kind `{other}` (expected workload or config)",
                self.function, self.variable
            )),
        }
    }

    pub fn to_spec_point(&self) -> Result<SpecPoint, String> {
        let kind = self.parse_kind()?;
        let mut p = SpecPoint::new(PointId::new(&self.function, &self.variable), kind);
        if let Some(c) = &self.candidates {
            p.candidate_values = Some(c.iter().map(|v| Value::from(*v)).collect());
        }
        if let Some(g) = self.guard {
            p.guard_enabled = g;
        }
        if let Some(c) = self.collection {
            p.collection_enabled = c;
        }
        p.driver_coupled = self.driver_coupled;
        Ok(p)
    }
}

/// Exploration policy selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum PolicyConfig {
    #[serde(rename = "exhaustive_sweep")]
    ExhaustiveSweep {
        #[serde(default = "default_windows_per_config")]
        windows_per_config: u32,
    },
    #[serde(rename = "epsilon_greedy")]
    EpsilonGreedy {
        epsilon: f64,
        #[serde(default = "default_windows_per_config")]
        windows_per_pull: u32,
        pulls: u32,
        #[serde(default)]
        seed: u64,
    },
}

impl PolicyConfig {
    pub fn to_policy(&self) -> Result<ExplorationPolicy, String> {
        match self {
            PolicyConfig::ExhaustiveSweep { windows_per_config } => {
                if *windows_per_config < 1 {
                    return Err("windows_per_config must be at least 1".into());
                }
                Ok(ExplorationPolicy::ExhaustiveSweep {
                    windows_per_config: *windows_per_config,
                })
            }
            PolicyConfig::EpsilonGreedy {
                epsilon,
                windows_per_pull,
                pulls,
                seed,
            } => {
                if !(0.0..=1.0).contains(epsilon) {
                    return Err("epsilon must be within [0, 1]".into());
                }
                if *windows_per_pull < 1 || *pulls < 1 {
                    return Err("windows_per_pull and pulls must be at least 1".into());
                }
                Ok(ExplorationPolicy::EpsilonGreedy {
                    epsilon: *epsilon,
                    windows_per_pull: *windows_per_pull,
                    pulls: *pulls,
                    seed: *seed,
                })
            }
        }
    }
}

fn default_windows_per_config() -> u32 {
    1
}

fn default_calls_per_window() -> u64 {
    50
}

fn default_budget_ops() -> u64 {
    1_000_000
}

fn default_drop_threshold() -> f64 {
    DEFAULT_DROP_THRESHOLD
}

fn default_drop_windows() -> u32 {
    DEFAULT_DROP_WINDOWS
}

fn default_unroll_cap() -> u32 {
    DEFAULT_UNROLL_CAP
}

fn default_config_cap() -> usize {
    512
}

/// Runtime policy: points plus measurement and search parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuntimePolicy {
    #[serde(default)]
    pub points: Vec<PointConfig>,
    /// Absent means exploration never starts (manual hooks only).
    #[serde(default)]
    pub policy: Option<PolicyConfig>,
    #[serde(default = "default_calls_per_window")]
    pub calls_per_window: u64,
    #[serde(default)]
    pub monitor_windows: u32,
    #[serde(default = "default_drop_threshold")]
    pub drop_threshold: f64,
    #[serde(default = "default_drop_windows")]
    pub drop_windows: u32,
    #[serde(default = "default_unroll_cap")]
    pub unroll_cap: u32,
    #[serde(default = "default_budget_ops")]
    pub budget_ops: u64,
    #[serde(default)]
    pub seed: u64,
    /// Cap on enumerated non-generic configurations.
    #[serde(default = "default_config_cap")]
    pub config_cap: usize,
}

impl Default for RuntimePolicy {
    fn default() -> Self {
        RuntimePolicy {
            points: Vec::new(),
            policy: None,
            calls_per_window: default_calls_per_window(),
            monitor_windows: 0,
            drop_threshold: default_drop_threshold(),
            drop_windows: default_drop_windows(),
            unroll_cap: default_unroll_cap(),
            budget_ops: default_budget_ops(),
            seed: 0,
            config_cap: default_config_cap(),
        }
    }
}
