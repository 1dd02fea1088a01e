//! Physical qubit models, QEC schemes and code distance selection.
//!
//! The logical error rate per logical qubit and cycle follows the crossing
//! model `a * (p / p_th)^((d + 1) / 2)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, FormulaError, VariableEnvironment};

pub const DEFAULT_MAX_CODE_DISTANCE: u32 = 51;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QecError {
    #[error("physical error rate {physical} is not below the threshold {threshold}")]
    AboveThreshold { physical: f64, threshold: f64 },
    #[error("no code distance up to {0} reaches the required logical error rate")]
    DistanceExhausted(u32),
    #[error("invalid code distance {0}")]
    InvalidDistance(u32),
    #[error("invalid qubit parameters: {0}")]
    InvalidQubitParams(String),
    #[error("invalid QEC scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid target error rate {0}")]
    InvalidTarget(f64),
    #[error("formula `{formula}`: {source}")]
    Formula {
        formula: String,
        #[source]
        source: FormulaError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InstructionSet {
    GateBased,
    Majorana,
}

/// Operation times in nanoseconds, error rates as probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PhysicalQubitParams {
    pub instruction_set: InstructionSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_qubit_gate_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_qubit_gate_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_qubit_measurement_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_qubit_measurement_time: Option<f64>,
    pub t_gate_time: f64,
    pub clifford_error_rate: f64,
    pub readout_error_rate: f64,
    pub t_gate_error_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idle_error_rate: Option<f64>,
}

impl PhysicalQubitParams {
    pub fn validate(&self) -> Result<(), QecError> {
        let invalid = |msg: String| Err(QecError::InvalidQubitParams(msg));
        let required: &[(&str, Option<f64>)] = match self.instruction_set {
            InstructionSet::GateBased => &[
                ("oneQubitGateTime", self.one_qubit_gate_time),
                ("twoQubitGateTime", self.two_qubit_gate_time),
                ("oneQubitMeasurementTime", self.one_qubit_measurement_time),
            ],
            InstructionSet::Majorana => &[
                ("oneQubitMeasurementTime", self.one_qubit_measurement_time),
                ("twoQubitMeasurementTime", self.two_qubit_measurement_time),
            ],
        };
        for (name, value) in required {
            if value.is_none() {
                return invalid(format!("{name} is required for this instruction set"));
            }
        }
        let times = [
            ("oneQubitGateTime", self.one_qubit_gate_time),
            ("twoQubitGateTime", self.two_qubit_gate_time),
            ("oneQubitMeasurementTime", self.one_qubit_measurement_time),
            ("twoQubitMeasurementTime", self.two_qubit_measurement_time),
            ("tGateTime", Some(self.t_gate_time)),
        ];
        for (name, value) in times {
            if let Some(t) = value {
                if !(t.is_finite() && t > 0.0) {
                    return invalid(format!("{name} must be a positive time, got {t}"));
                }
            }
        }
        let rates = [
            ("cliffordErrorRate", Some(self.clifford_error_rate)),
            ("readoutErrorRate", Some(self.readout_error_rate)),
            ("tGateErrorRate", Some(self.t_gate_error_rate)),
            ("idleErrorRate", self.idle_error_rate),
        ];
        for (name, value) in rates {
            if let Some(p) = value {
                if !(0.0..1.0).contains(&p) {
                    return invalid(format!("{name} must lie in [0, 1), got {p}"));
                }
            }
        }
        Ok(())
    }

    /// Error rate fed to the crossing model: the worst of the Clifford,
    /// readout and (when given) idle rates.
    pub fn effective_error_rate(&self) -> f64 {
        let p = self.clifford_error_rate.max(self.readout_error_rate);
        self.idle_error_rate.map_or(p, |idle| p.max(idle))
    }

    /// Binds the operation-time variables available to scheme formulas.
    pub fn time_variables(&self) -> VariableEnvironment {
        let mut env = VariableEnvironment::new();
        let times = [
            ("oneQubitGateTime", self.one_qubit_gate_time),
            ("twoQubitGateTime", self.two_qubit_gate_time),
            ("oneQubitMeasurementTime", self.one_qubit_measurement_time),
            ("twoQubitMeasurementTime", self.two_qubit_measurement_time),
        ];
        for (name, value) in times {
            if let Some(t) = value {
                // validated params only hold finite times
                let _ = env.bind(name, t);
            }
        }
        env
    }

    /// Duration of the slowest physical operation; the cycle length used for
    /// distillation units running directly on physical qubits.
    pub fn physical_cycle_time(&self) -> f64 {
        [
            self.one_qubit_gate_time,
            self.two_qubit_gate_time,
            self.one_qubit_measurement_time,
            self.two_qubit_measurement_time,
            Some(self.t_gate_time),
        ]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max)
    }
}

fn default_max_code_distance() -> u32 {
    DEFAULT_MAX_CODE_DISTANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QecScheme {
    pub name: String,
    pub crossing_prefactor: f64,
    pub error_correction_threshold: f64,
    pub logical_cycle_time: Formula,
    pub physical_qubits_per_logical_qubit: Formula,
    #[serde(default = "default_max_code_distance")]
    pub max_code_distance: u32,
}

impl QecScheme {
    pub fn surface_code() -> Self {
        Self {
            name: "surface_code".into(),
            crossing_prefactor: 0.03,
            error_correction_threshold: 0.01,
            logical_cycle_time: formula(
                "(4 * twoQubitGateTime + 2 * oneQubitMeasurementTime) * codeDistance",
            ),
            physical_qubits_per_logical_qubit: formula("2 * codeDistance ^ 2"),
            max_code_distance: DEFAULT_MAX_CODE_DISTANCE,
        }
    }

    /// Hastings-Haah floquet code.
    pub fn floquet_code() -> Self {
        Self {
            name: "floquet_code".into(),
            crossing_prefactor: 0.07,
            error_correction_threshold: 0.01,
            logical_cycle_time: formula("3 * codeDistance * oneQubitMeasurementTime"),
            physical_qubits_per_logical_qubit: formula(
                "4 * codeDistance ^ 2 + 8 * (codeDistance - 1)",
            ),
            max_code_distance: DEFAULT_MAX_CODE_DISTANCE,
        }
    }

    /// Looks up a built-in scheme. `hastings_haah` and `Hastings-Haah` are
    /// accepted as aliases of `floquet_code`.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "surface_code" | "surface" => Some(Self::surface_code()),
            "floquet_code" | "floquet" | "hastings_haah" | "Hastings-Haah" => {
                Some(Self::floquet_code())
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), QecError> {
        if !(self.crossing_prefactor.is_finite() && self.crossing_prefactor > 0.0) {
            return Err(QecError::InvalidScheme(format!(
                "crossing prefactor must be positive, got {}",
                self.crossing_prefactor
            )));
        }
        let p = self.error_correction_threshold;
        if !(p > 0.0 && p < 1.0) {
            return Err(QecError::InvalidScheme(format!(
                "error correction threshold must lie in (0, 1), got {p}"
            )));
        }
        if self.max_code_distance < 3 || self.max_code_distance.is_multiple_of(2) {
            return Err(QecError::InvalidScheme(format!(
                "max code distance must be odd and at least 3, got {}",
                self.max_code_distance
            )));
        }
        Ok(())
    }

    pub fn logical_error_rate(&self, physical_error_rate: f64, distance: u32) -> f64 {
        let ratio = physical_error_rate / self.error_correction_threshold;
        self.crossing_prefactor * ratio.powi(distance.div_ceil(2) as i32)
    }
}

fn formula(src: &str) -> Formula {
    Formula::parse(src).expect("built-in formula parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogicalQubitProfile {
    pub code_distance: u32,
    pub physical_qubits_per_logical_qubit: u64,
    /// Nanoseconds.
    pub logical_cycle_time: f64,
    /// Hertz.
    pub logical_clock_speed: f64,
    pub logical_error_rate_per_cycle: f64,
}

/// Per-qubit, per-cycle logical error target.
#[allow(clippy::cast_precision_loss)]
pub fn required_logical_error_rate(budget: f64, logical_qubits: u64, depth: u64) -> f64 {
    budget / (logical_qubits as f64 * depth as f64)
}

/// Smallest odd distance `d >= 3` whose logical error rate meets `target`.
pub fn compute_code_distance(
    scheme: &QecScheme,
    physical_error_rate: f64,
    target: f64,
) -> Result<u32, QecError> {
    scheme.validate()?;
    if !(target > 0.0 && target < 1.0) {
        return Err(QecError::InvalidTarget(target));
    }
    if !(physical_error_rate > 0.0) {
        return Err(QecError::InvalidQubitParams(format!(
            "effective physical error rate must be positive, got {physical_error_rate}"
        )));
    }
    if physical_error_rate >= scheme.error_correction_threshold {
        return Err(QecError::AboveThreshold {
            physical: physical_error_rate,
            threshold: scheme.error_correction_threshold,
        });
    }
    (3..=scheme.max_code_distance)
        .step_by(2)
        .find(|&d| scheme.logical_error_rate(physical_error_rate, d) <= target)
        .ok_or(QecError::DistanceExhausted(scheme.max_code_distance))
}

/// Evaluates the scheme's formulas at distance `d`.
///
/// Returns `(physical qubits per logical qubit, logical cycle time in ns)`.
#[allow(clippy::cast_possible_truncation, clippy::cast_sign_loss)]
pub fn scheme_cost(
    scheme: &QecScheme,
    params: &PhysicalQubitParams,
    d: u32,
) -> Result<(u64, f64), QecError> {
    let env = params
        .time_variables()
        .with("codeDistance", f64::from(d))
        .expect("distance is finite");
    let eval = |f: &Formula| {
        f.evaluate(&env).map_err(|source| QecError::Formula {
            formula: f.source().to_string(),
            source,
        })
    };
    let qubits = eval(&scheme.physical_qubits_per_logical_qubit)?.ceil();
    let cycle = eval(&scheme.logical_cycle_time)?;
    if qubits < 1.0 || cycle <= 0.0 {
        return Err(QecError::InvalidScheme(format!(
            "formulas must be positive at distance {d} (qubits {qubits}, cycle time {cycle})"
        )));
    }
    Ok((qubits as u64, cycle))
}

pub fn logical_qubit_profile(
    scheme: &QecScheme,
    params: &PhysicalQubitParams,
    d: u32,
) -> Result<LogicalQubitProfile, QecError> {
    if d < 3 || d.is_multiple_of(2) || d > scheme.max_code_distance {
        return Err(QecError::InvalidDistance(d));
    }
    let (qubits, cycle) = scheme_cost(scheme, params, d)?;
    Ok(LogicalQubitProfile {
        code_distance: d,
        physical_qubits_per_logical_qubit: qubits,
        logical_cycle_time: cycle,
        logical_clock_speed: 1e9 / cycle,
        logical_error_rate_per_cycle: scheme
            .logical_error_rate(params.effective_error_rate(), d),
    })
}
