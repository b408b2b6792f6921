//! Run configuration: JSON (or TOML) with flat model keys and optional
//! sections per command.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use psos_core::{BoundaryCondition, Mode, Model, ModelParams};

use crate::error::{Error, Result};
use crate::experiments::{CiPolicy, StartKind, TailMeasure, TargetKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Free,
    Floor,
    FloorCeiling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "L")]
    pub side: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_plus: Option<i32>,
    #[serde(default)]
    pub bc: BoundaryCondition,
    #[serde(default)]
    pub bond_double_count: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub sweeps: u64,
    /// Sweeps between recorded samples.
    pub sample_every: u64,
    pub start_height: i32,
    pub replicas: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection { sweeps: 100, sample_every: 1, start_height: 0, replicas: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "K")]
    pub k: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "M")]
    pub proxy_side: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "T_max")]
    pub t_max_sweeps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "L_list")]
    pub sides: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_list: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separations: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<StartKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_burn_in: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(rename = "H")]
    pub typical_height: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_policy: Option<CiPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_measure: Option<TailMeasure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub high_start: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_side: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: None, formats: vec!["jsonl".into(), "csv".into()] }
    }
}

fn missing(field: &str) -> Error {
    Error::Config(format!("missing required field `{field}`"))
}

impl Config {
    /// Reads a JSON or TOML file (by extension) into a JSON value.
    /// Reads a config file as a JSON value. The file is also checked
    /// against the config type here, so field errors carry their position.
    pub fn read_value(path: &Path) -> Result<Value> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |e: String| Error::Config(format!("{}: {e}", path.display()));
        if path.extension().and_then(|e| e.to_str()) == Some("toml") {
            toml::from_str::<Config>(&text).map_err(|e| bad(e.to_string()))?;
            let v: toml::Value = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
            serde_json::to_value(v).map_err(|e| bad(e.to_string()))
        } else {
            // serde_json errors end in "at line L column C"
            serde_json::from_str::<Config>(&text).map_err(|e| bad(e.to_string()))?;
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
        }
    }

    pub fn from_value(v: Value) -> Result<Self> {
        serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn p(&self) -> Result<f64> {
        self.p.ok_or_else(|| missing("p"))
    }

    pub fn beta(&self) -> Result<f64> {
        self.beta.ok_or_else(|| missing("beta"))
    }

    pub fn side(&self) -> Result<usize> {
        self.side.ok_or_else(|| missing("L"))
    }

    pub fn resolved_mode(&self) -> Result<Mode> {
        match self.mode.ok_or_else(|| missing("mode"))? {
            ModeName::Free => Ok(Mode::Free),
            ModeName::Floor => Ok(Mode::Floor),
            ModeName::FloorCeiling => Ok(Mode::FloorCeiling { n_plus: self.n_plus.ok_or_else(|| missing("n_plus"))? }),
        }
    }

    pub fn model(&self) -> Result<Model> {
        let mut params = ModelParams::new(self.p()?, self.beta()?, self.side()?, self.resolved_mode()?)
            .with_bc(self.bc.clone());
        params.bond_double_count = self.bond_double_count;
        Ok(Model::new(params)?)
    }

    /// SHA-256 of the canonical (sorted-key, compact) JSON of the config
    /// without its output section, prefixed by `command`.
    pub fn hash(&self, command: &str) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("output");
        }
        canonical_hash(command, &v)
    }
}

/// SHA-256 over `command`, a zero byte and the compact JSON of `v`. Object
/// keys serialize in sorted order, so equal values hash equally.
pub fn canonical_hash(command: &str, v: &Value) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(serde_json::to_vec(v).expect("value serializes"));
    hex::encode(h.finalize())
}

/// Sets `key` in a JSON object, creating nested objects along `path`.
pub fn set_path(root: &mut Value, path: &[&str], value: Value) {
    let mut cur = root;
    for (i, key) in path.iter().enumerate() {
        if !cur.is_object() {
            *cur = Value::Object(Default::default());
        }
        let map = cur.as_object_mut().expect("object");
        if i + 1 == path.len() {
            map.insert((*key).to_string(), value);
            return;
        }
        cur = map.entry((*key).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = r#"{"p": 1.5, "beta": 2, "L": 4, "mode": "floor_ceiling", "n_plus": 3,
            "bc": {"kind": "const", "value": 1}, "experiment": {"a": 0.5, "L_list": [4, 6]}}"#;
        let c = Config::parse_json(text).unwrap();
        let again = Config::parse_json(&c.to_json_pretty()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash("x"), again.hash("x"));
        assert_ne!(c.hash("x"), c.hash("y"));
        assert_eq!(c.model().unwrap().mode(), Mode::FloorCeiling { n_plus: 3 });
    }

    #[test]
    fn missing_and_unknown_fields_are_named() {
        let c = Config::parse_json(r#"{"p": 1, "L": 3, "mode": "free"}"#).unwrap();
        let e = c.model().unwrap_err();
        assert!(e.to_string().contains("`beta`"));
        let e = Config::parse_json(r#"{"p": 1, "betta": 1}"#).unwrap_err();
        assert!(e.to_string().contains("betta"));
        let c = Config::parse_json(r#"{"p": 1, "beta": 1, "L": 3, "mode": "floor_ceiling"}"#).unwrap();
        assert!(c.model().unwrap_err().to_string().contains("`n_plus`"));
    }

    #[test]
    fn output_dir_does_not_change_hash() {
        let mut c = Config::parse_json(r#"{"p": 1, "beta": 1}"#).unwrap();
        let h = c.hash("simulate");
        c.output.dir = Some("elsewhere".into());
        assert_eq!(h, c.hash("simulate"));
    }

    #[test]
    fn nested_set() {
        let mut v = serde_json::json!({});
        set_path(&mut v, &["experiment", "a"], serde_json::json!(0.5));
        assert_eq!(v, serde_json::json!({"experiment": {"a": 0.5}}));
    }
}
