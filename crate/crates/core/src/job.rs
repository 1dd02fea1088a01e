//! Job files and hardware profiles.
//!
//! A job is a JSON document naming exactly one algorithm input (`tracePath`,
//! `logicalCounts` or `postLayout`) together with the hardware, QEC scheme and
//! budget to estimate against. `qubitParams` and `qecScheme` accept either a
//! name or an object; an object with a `name` field starts from that preset
//! and overrides the remaining fields.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::counts::{count_trace_reader, CountsError, LogicalCounts};
use crate::layout::RotationSynthesis;
use crate::pipeline::{ErrorBudget, EstimateInput, EstimateRequest, PostLayoutEstimate};
use crate::qec::{InstructionSet, PhysicalQubitParams, QecScheme};
use crate::tfactory::{DistillationUnit, TFactoryConstraints};

pub const PROFILE_DIR_ENV: &str = "FTQC_PROFILE_DIR";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HardwareProfile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub default_scheme: String,
    pub qubit_params: PhysicalQubitParams,
}

const BUILTIN_PROFILES: [&str; 6] = [
    include_str!("../profiles/qubit_gate_ns_e3.json"),
    include_str!("../profiles/qubit_gate_ns_e4.json"),
    include_str!("../profiles/qubit_gate_us_e3.json"),
    include_str!("../profiles/qubit_gate_us_e4.json"),
    include_str!("../profiles/qubit_maj_ns_e4.json"),
    include_str!("../profiles/qubit_maj_ns_e6.json"),
];

/// Named hardware profiles, in listing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRegistry {
    profiles: Vec<HardwareProfile>,
}

impl ProfileRegistry {
    pub fn builtin() -> Self {
        let profiles = BUILTIN_PROFILES
            .iter()
            .map(|text| serde_json::from_str(text).expect("built-in profile is valid"))
            .collect();
        Self { profiles }
    }

    /// Loads every `*.json` file in `dir`, sorted by file name.
    pub fn from_dir(dir: &Path) -> Result<Self, ConfigError> {
        let file_err = |path: &Path, message: String| ConfigError::File {
            path: path.display().to_string(),
            message,
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| file_err(dir, e.to_string()))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        paths.sort();
        let mut profiles = Vec::with_capacity(paths.len());
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|e| file_err(&path, e.to_string()))?;
            let profile: HardwareProfile =
                serde_json::from_str(&text).map_err(|e| file_err(&path, e.to_string()))?;
            profile
                .qubit_params
                .validate()
                .map_err(|e| file_err(&path, e.to_string()))?;
            profiles.push(profile);
        }
        Ok(Self { profiles })
    }

    /// Built-in profiles unless `FTQC_PROFILE_DIR` points elsewhere.
    pub fn load() -> Result<Self, ConfigError> {
        match std::env::var_os(PROFILE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::from_dir(Path::new(&dir)),
            _ => Ok(Self::builtin()),
        }
    }

    pub fn get(&self, name: &str) -> Option<&HardwareProfile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &HardwareProfile> {
        self.profiles.iter()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Raw job document. Use [`JobSpec::resolve`] to obtain an estimate request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct JobSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logical_counts: Option<LogicalCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_layout: Option<PostLayoutEstimate>,
    pub qubit_params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qec_scheme: Option<Value>,
    pub error_budget: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distillation_units: Option<Vec<DistillationUnit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_factory_constraints: Option<TFactoryConstraints>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_synthesis: Option<RotationSynthesis>,
}

/// Job resolution failure: either the document itself is wrong, or counting
/// the referenced trace failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("logical counts: {0}")]
    Counts(#[from] CountsError),
}

impl JobSpec {
    pub fn from_value(value: Value) -> Result<Self, ConfigError> {
        serde_json::from_value(value).map_err(|e| invalid(format!("invalid job: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::from_value(read_json(path)?)
    }

    /// Resolves names and presets. Relative trace paths are taken relative to
    /// `base_dir`.
    pub fn resolve(
        &self,
        base_dir: &Path,
        profiles: &ProfileRegistry,
    ) -> Result<EstimateRequest, ResolveError> {
        let present = [
            self.trace_path.is_some(),
            self.logical_counts.is_some(),
            self.post_layout.is_some(),
        ]
        .iter()
        .filter(|p| **p)
        .count();
        if present != 1 {
            return Err(invalid(format!(
                "exactly one of tracePath, logicalCounts and postLayout is required, found {present}"
            ))
            .into());
        }

        let (qubit_params, profile_name, default_scheme) =
            resolve_qubit_params(&self.qubit_params, profiles)?;
        qubit_params
            .validate()
            .map_err(|e| invalid(format!("qubitParams: {e}")))?;
        let scheme = resolve_scheme(self.qec_scheme.as_ref(), &default_scheme)?;
        scheme
            .validate()
            .map_err(|e| invalid(format!("qecScheme: {e}")))?;
        let budget = resolve_budget(&self.error_budget)?;

        let distillation_units = match &self.distillation_units {
            Some(units) if units.is_empty() => {
                return Err(invalid("distillationUnits must not be empty").into())
            }
            Some(units) => units.clone(),
            None => vec![DistillationUnit::fifteen_to_one()],
        };

        let input = if let Some(path) = &self.trace_path {
            let path = base_dir.join(path);
            let file = File::open(&path).map_err(|e| ConfigError::File {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            EstimateInput::Counts(count_trace_reader(BufReader::new(file))?)
        } else if let Some(counts) = self.logical_counts {
            EstimateInput::Counts(counts)
        } else {
            EstimateInput::PostLayout(self.post_layout.expect("one input is present"))
        };

        Ok(EstimateRequest {
            input,
            qubit_params,
            profile_name,
            scheme,
            budget,
            distillation_units,
            constraints: self.t_factory_constraints.unwrap_or_default(),
            rotation_synthesis: self.rotation_synthesis.unwrap_or_default(),
        })
    }
}

pub(crate) fn read_json(path: &Path) -> Result<Value, ConfigError> {
    let file_err = |message: String| ConfigError::File {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))
}

/// Overlays every key of `overrides` except `name` onto `base`.
fn overlay(mut base: Value, overrides: &Map<String, Value>) -> Value {
    if let Value::Object(map) = &mut base {
        for (k, v) in overrides {
            if k != "name" {
                map.insert(k.clone(), v.clone());
            }
        }
    }
    base
}

fn resolve_qubit_params(
    spec: &Value,
    profiles: &ProfileRegistry,
) -> Result<(PhysicalQubitParams, Option<String>, String), ConfigError> {
    let lookup = |name: &str| {
        profiles
            .get(name)
            .ok_or_else(|| invalid(format!("unknown hardware profile `{name}`")))
    };
    let (params_value, name, scheme) = match spec {
        Value::String(name) => {
            let profile = lookup(name)?;
            return Ok((
                profile.qubit_params.clone(),
                Some(profile.name.clone()),
                profile.default_scheme.clone(),
            ));
        }
        Value::Object(map) => match map.get("name") {
            Some(Value::String(name)) => {
                let profile = lookup(name)?;
                let base = serde_json::to_value(&profile.qubit_params).expect("params serialize");
                (overlay(base, map), Some(profile.name.clone()), Some(profile.default_scheme.clone()))
            }
            Some(_) => return Err(invalid("qubitParams.name must be a string")),
            None => (spec.clone(), None, None),
        },
        _ => return Err(invalid("qubitParams must be a profile name or an object")),
    };
    let params: PhysicalQubitParams = serde_json::from_value(params_value)
        .map_err(|e| invalid(format!("qubitParams: {e}")))?;
    let scheme = scheme.unwrap_or_else(|| {
        match params.instruction_set {
            InstructionSet::GateBased => "surface_code",
            InstructionSet::Majorana => "floquet_code",
        }
        .to_string()
    });
    Ok((params, name, scheme))
}

fn resolve_scheme(spec: Option<&Value>, default_name: &str) -> Result<QecScheme, ConfigError> {
    let builtin = |name: &str| {
        QecScheme::builtin(name).ok_or_else(|| invalid(format!("unknown QEC scheme `{name}`")))
    };
    match spec {
        None => builtin(default_name),
        Some(Value::String(name)) => builtin(name),
        Some(Value::Object(map)) => {
            let value = match map.get("name") {
                Some(Value::String(name)) => match QecScheme::builtin(name) {
                    Some(base) => {
                        let mut v = overlay(
                            serde_json::to_value(&base).expect("scheme serializes"),
                            map,
                        );
                        v["name"] = Value::String(base.name);
                        v
                    }
                    // a fully custom scheme may carry its own name
                    None => Value::Object(map.clone()),
                },
                Some(_) => return Err(invalid("qecScheme.name must be a string")),
                None => {
                    let mut m = map.clone();
                    m.insert("name".into(), Value::String("custom".into()));
                    Value::Object(m)
                }
            };
            serde_json::from_value(value).map_err(|e| invalid(format!("qecScheme: {e}")))
        }
        Some(_) => Err(invalid("qecScheme must be a scheme name or an object")),
    }
}

fn resolve_budget(spec: &Value) -> Result<ErrorBudget, ConfigError> {
    match spec {
        Value::Number(n) => Ok(ErrorBudget::uniform(
            n.as_f64().ok_or_else(|| invalid("errorBudget must be a number"))?,
        )),
        Value::Object(_) => serde_json::from_value(spec.clone())
            .map_err(|e| invalid(format!("errorBudget: {e}"))),
        _ => Err(invalid("errorBudget must be a number or an object")),
    }
}

/// Sets the numeric field at a dotted path such as `errorBudget.total`,
/// expanding name shorthands (`"qubitParams": "qubit_maj_ns_e4"`) and number
/// shorthands (`"errorBudget": 1e-4`) into objects on the way.
pub fn set_dotted(job: &mut Value, path: &str, value: Value) -> Result<(), ConfigError> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(invalid(format!("invalid parameter path `{path}`")));
    }
    let mut node = job;
    for (i, key) in keys.iter().enumerate() {
        match node {
            Value::String(name) => {
                let name = std::mem::take(name);
                *node = serde_json::json!({ "name": name });
            }
            Value::Number(_) if i > 0 && keys[i - 1] == "errorBudget" => {
                let total = node.take();
                *node = serde_json::json!({ "total": total });
            }
            Value::Object(_) => {}
            _ => {
                return Err(invalid(format!(
                    "parameter path `{path}` does not address an object at `{}`",
                    keys[..i].join(".")
                )))
            }
        }
        let map = node.as_object_mut().expect("node is an object");
        if i + 1 == keys.len() {
            match map.get(*key) {
                None | Some(Value::Number(_)) => {
                    map.insert((*key).to_string(), value);
                    return Ok(());
                }
                Some(_) => {
                    return Err(invalid(format!("parameter `{path}` is not a numeric field")))
                }
            }
        }
        node = map
            .entry((*key).to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("path has at least one key")
}
