//! T-state distillation pipelines and T-factory fleet sizing.
//!
//! A factory is a chain of distillation rounds. Round `k` runs
//! `numParallelUnits` copies of one distillation unit, either directly on
//! physical qubits (code distance 1) or on logical qubits at some odd code
//! distance. Rounds execute one after another inside a factory, so a
//! factory's footprint is the largest round footprint and its duration is the
//! sum of round durations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, FormulaError, VariableEnvironment};
use crate::qec::{scheme_cost, PhysicalQubitParams, QecError, QecScheme};
use crate::serde_util::lenient_opt_u64;

pub const DEFAULT_MAX_ROUNDS: u32 = 3;
pub const MAX_UNITS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactoryError {
    #[error("no distillation pipeline reaches T-state error {required:e} from {input:e}")]
    NoFeasiblePipeline { required: f64, input: f64 },
    #[error(
        "{copies} T factories needed but at most {max} allowed within a slowdown of {max_slowdown}"
    )]
    FactoryConstraintInfeasible {
        copies: u64,
        max: u64,
        max_slowdown: f64,
    },
    #[error("one factory run takes {duration} ns but the algorithm only runs for {runtime} ns")]
    RuntimeTooShort { duration: f64, runtime: f64 },
    #[error("invalid distillation unit `{unit}`: {reason}")]
    InvalidUnit { unit: String, reason: String },
    #[error("invalid factory input: {0}")]
    InvalidInput(String),
    #[error("distillation unit `{unit}` formula `{formula}`: {source}")]
    Formula {
        unit: String,
        formula: String,
        #[source]
        source: FormulaError,
    },
    #[error(transparent)]
    Qec(#[from] QecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Applicability {
    PhysicalOnly,
    LogicalOnly,
    Both,
}

impl Applicability {
    fn allows(self, physical: bool) -> bool {
        match self {
            Applicability::PhysicalOnly => physical,
            Applicability::LogicalOnly => !physical,
            Applicability::Both => true,
        }
    }
}

/// Formulas see `inputErrorRate`, `cliffordErrorRate`,
/// `physicalQubitsPerLogicalQubit`, `logicalCycleTime`, `codeDistance` and
/// the physical operation times. On physical qubits `codeDistance` and
/// `physicalQubitsPerLogicalQubit` are 1, `cliffordErrorRate` is the physical
/// Clifford rate and `logicalCycleTime` is the slowest physical operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DistillationUnit {
    pub name: String,
    pub num_input_ts: u64,
    pub num_output_ts: u64,
    pub failure_probability_formula: Formula,
    pub output_error_rate_formula: Formula,
    pub physical_qubits_formula: Formula,
    pub duration_formula: Formula,
    pub applicability: Applicability,
}

impl DistillationUnit {
    pub fn fifteen_to_one() -> Self {
        let f = |s: &str| Formula::parse(s).expect("built-in formula parses");
        Self {
            name: "15-to-1".into(),
            num_input_ts: 15,
            num_output_ts: 1,
            failure_probability_formula: f("15 * inputErrorRate + 356 * cliffordErrorRate"),
            output_error_rate_formula: f("35 * inputErrorRate ^ 3 + 7.1 * cliffordErrorRate"),
            physical_qubits_formula: f("31 * physicalQubitsPerLogicalQubit"),
            duration_formula: f("11 * logicalCycleTime"),
            applicability: Applicability::Both,
        }
    }

    pub fn validate(&self) -> Result<(), FactoryError> {
        if self.num_output_ts == 0 || self.num_output_ts >= self.num_input_ts {
            return Err(FactoryError::InvalidUnit {
                unit: self.name.clone(),
                reason: format!(
                    "needs 0 < output T states < input T states, got {} -> {}",
                    self.num_input_ts, self.num_output_ts
                ),
            });
        }
        Ok(())
    }

    fn eval(&self, formula: &Formula, env: &VariableEnvironment) -> Result<f64, FactoryError> {
        formula.evaluate(env).map_err(|source| FactoryError::Formula {
            unit: self.name.clone(),
            formula: formula.source().to_string(),
            source,
        })
    }
}

fn default_slowdown() -> f64 {
    1.0
}

fn default_max_rounds() -> u32 {
    DEFAULT_MAX_ROUNDS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TFactoryConstraints {
    #[serde(
        default,
        deserialize_with = "lenient_opt_u64",
        skip_serializing_if = "Option::is_none"
    )]
    pub max_t_factory_copies: Option<u64>,
    #[serde(default = "default_slowdown")]
    pub max_logical_cycle_slowdown: f64,
    #[serde(default = "default_max_rounds")]
    pub max_distillation_rounds: u32,
}

impl Default for TFactoryConstraints {
    fn default() -> Self {
        Self {
            max_t_factory_copies: None,
            max_logical_cycle_slowdown: 1.0,
            max_distillation_rounds: DEFAULT_MAX_ROUNDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DistillationRound {
    pub unit: String,
    /// 1 for a round on physical qubits.
    pub code_distance: u32,
    pub num_parallel_units: u64,
    pub physical_qubits_per_unit: u64,
    /// Expected duration including retries, ns.
    pub duration_per_unit: f64,
    pub failure_probability: f64,
    pub output_error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TFactoryPlan {
    pub rounds: Vec<DistillationRound>,
    pub output_error_rate: f64,
    /// ns
    pub duration_per_run: f64,
    pub physical_qubits_per_copy: u64,
    pub t_states_per_run: u64,
    pub num_copies: u64,
    pub runs_per_copy: u64,
}

impl TFactoryPlan {
    /// Placeholder for programs that need no T states.
    pub fn empty() -> Self {
        Self {
            rounds: Vec::new(),
            output_error_rate: 0.0,
            duration_per_run: 0.0,
            physical_qubits_per_copy: 0,
            t_states_per_run: 0,
            num_copies: 0,
            runs_per_copy: 0,
        }
    }

    pub fn total_physical_qubits(&self) -> Option<u64> {
        self.num_copies.checked_mul(self.physical_qubits_per_copy)
    }

    pub fn supply(&self) -> u128 {
        u128::from(self.num_copies) * u128::from(self.runs_per_copy) * u128::from(self.t_states_per_run)
    }
}

pub fn required_t_state_error(budget: f64, total_t_states: u64) -> Result<f64, FactoryError> {
    if !(budget > 0.0 && budget < 1.0) {
        return Err(FactoryError::InvalidInput(format!(
            "T-state error budget {budget} must lie in (0, 1)"
        )));
    }
    if total_t_states == 0 {
        return Err(FactoryError::InvalidInput("no T states requested".into()));
    }
    #[allow(clippy::cast_precision_loss)]
    Ok(budget / total_t_states as f64)
}

/// Variables describing the qubits a round runs on.
#[derive(Debug, Clone)]
struct Level {
    distance: u32,
    env: VariableEnvironment,
}

fn levels(scheme: &QecScheme, params: &PhysicalQubitParams) -> Result<Vec<Level>, FactoryError> {
    let time_env = params.time_variables();
    let mut out = Vec::new();
    let physical = time_env
        .clone()
        .with("codeDistance", 1.0)
        .and_then(|e| e.with("physicalQubitsPerLogicalQubit", 1.0))
        .and_then(|e| e.with("logicalCycleTime", params.physical_cycle_time()))
        .and_then(|e| e.with("cliffordErrorRate", params.clifford_error_rate))
        .map_err(|e| FactoryError::InvalidInput(e.to_string()))?;
    out.push(Level {
        distance: 1,
        env: physical,
    });
    let p = params.effective_error_rate();
    for d in (3..=scheme.max_code_distance).step_by(2) {
        let (qubits, cycle) = scheme_cost(scheme, params, d)?;
        #[allow(clippy::cast_precision_loss)]
        let env = time_env
            .clone()
            .with("codeDistance", f64::from(d))
            .and_then(|e| e.with("physicalQubitsPerLogicalQubit", qubits as f64))
            .and_then(|e| e.with("logicalCycleTime", cycle))
            .and_then(|e| e.with("cliffordErrorRate", scheme.logical_error_rate(p, d)))
            .map_err(|e| FactoryError::InvalidInput(e.to_string()))?;
        out.push(Level { distance: d, env });
    }
    Ok(out)
}

/// One evaluated round before parallelism is assigned.
#[derive(Debug, Clone)]
struct RoundEval {
    unit: usize,
    distance: u32,
    qubits_per_unit: u64,
    duration: f64,
    failure: f64,
    output_error: f64,
}

/// Evaluates `unit` on `level` fed with states of error `input_error`.
/// Returns `None` when the unit does not improve its input there or fails
/// with certainty.
#[allow(clippy::cast_possible_truncation, clippy::cast_sign_loss)]
fn evaluate_round(
    unit: &DistillationUnit,
    unit_index: usize,
    level: &Level,
    input_error: f64,
) -> Result<Option<RoundEval>, FactoryError> {
    let env = level
        .env
        .clone()
        .with("inputErrorRate", input_error)
        .map_err(|e| FactoryError::InvalidInput(e.to_string()))?;
    let output_error = unit.eval(&unit.output_error_rate_formula, &env)?;
    let failure = unit.eval(&unit.failure_probability_formula, &env)?;
    if !(0.0..input_error).contains(&output_error) || !(0.0..1.0).contains(&failure) {
        return Ok(None);
    }
    let qubits = unit.eval(&unit.physical_qubits_formula, &env)?.ceil();
    let raw_duration = unit.eval(&unit.duration_formula, &env)?;
    if qubits < 1.0 || raw_duration <= 0.0 {
        return Err(FactoryError::InvalidUnit {
            unit: unit.name.clone(),
            reason: format!(
                "footprint and duration must be positive at distance {} (got {qubits}, {raw_duration})",
                level.distance
            ),
        });
    }
    Ok(Some(RoundEval {
        unit: unit_index,
        distance: level.distance,
        qubits_per_unit: qubits as u64,
        duration: raw_duration / (1.0 - failure),
        failure,
        output_error,
    }))
}

/// Assigns parallelism backwards from a single unit in the last round.
fn assemble(units: &[DistillationUnit], chain: &[RoundEval]) -> Option<TFactoryPlan> {
    let mut parallel = vec![0u64; chain.len()];
    let last = chain.len() - 1;
    parallel[last] = 1;
    for k in (0..last).rev() {
        let demand = parallel[k + 1].checked_mul(units[chain[k + 1].unit].num_input_ts)?;
        parallel[k] = demand.div_ceil(units[chain[k].unit].num_output_ts);
    }
    let mut footprint = 0u64;
    for (round, n) in chain.iter().zip(&parallel) {
        footprint = footprint.max(round.qubits_per_unit.checked_mul(*n)?);
    }
    let rounds = chain
        .iter()
        .zip(&parallel)
        .map(|(r, &n)| DistillationRound {
            unit: units[r.unit].name.clone(),
            code_distance: r.distance,
            num_parallel_units: n,
            physical_qubits_per_unit: r.qubits_per_unit,
            duration_per_unit: r.duration,
            failure_probability: r.failure,
            output_error_rate: r.output_error,
        })
        .collect();
    Some(TFactoryPlan {
        rounds,
        output_error_rate: chain[last].output_error,
        duration_per_run: chain.iter().map(|r| r.duration).sum(),
        physical_qubits_per_copy: footprint,
        t_states_per_run: units[chain[last].unit].num_output_ts,
        num_copies: 0,
        runs_per_copy: 0,
    })
}

fn better(candidate: &TFactoryPlan, best: &TFactoryPlan) -> bool {
    (
        candidate.physical_qubits_per_copy,
        candidate.duration_per_run,
        candidate.rounds.len(),
    )
        .partial_cmp(&(
            best.physical_qubits_per_copy,
            best.duration_per_run,
            best.rounds.len(),
        ))
        == Some(std::cmp::Ordering::Less)
}

struct Search<'a> {
    units: &'a [DistillationUnit],
    levels: &'a [Level],
    required: f64,
    max_rounds: usize,
    chain: Vec<RoundEval>,
    best: Option<TFactoryPlan>,
}

impl Search<'_> {
    fn extend(&mut self, input_error: f64, logical_started: bool) -> Result<(), FactoryError> {
        for (ui, unit) in self.units.iter().enumerate() {
            for level in self.levels {
                let physical = level.distance == 1;
                // once encoded, states never go back to bare physical qubits
                if !unit.applicability.allows(physical) || (physical && logical_started) {
                    continue;
                }
                let Some(round) = evaluate_round(unit, ui, level, input_error)? else {
                    continue;
                };
                let output = round.output_error;
                self.chain.push(round);
                if output <= self.required {
                    // appending rounds to a feasible chain cannot shrink it
                    if let Some(plan) = assemble(self.units, &self.chain) {
                        if self.best.as_ref().is_none_or(|b| better(&plan, b)) {
                            self.best = Some(plan);
                        }
                    }
                } else if self.chain.len() < self.max_rounds {
                    self.extend(output, logical_started || !physical)?;
                }
                self.chain.pop();
            }
        }
        Ok(())
    }
}

/// Exhaustive search for the smallest distillation pipeline turning states of
/// error `input_error` into states of error at most `required_error`.
///
/// Candidates are ordered by footprint, then duration per run, then number of
/// rounds. The returned plan has `num_copies` and `runs_per_copy` unset; see
/// [`size_fleet`].
pub fn search_pipeline(
    units: &[DistillationUnit],
    scheme: &QecScheme,
    params: &PhysicalQubitParams,
    input_error: f64,
    required_error: f64,
    max_rounds: u32,
) -> Result<TFactoryPlan, FactoryError> {
    if units.is_empty() || units.len() > MAX_UNITS {
        return Err(FactoryError::InvalidInput(format!(
            "between 1 and {MAX_UNITS} distillation units required, got {}",
            units.len()
        )));
    }
    for unit in units {
        unit.validate()?;
    }
    if !(input_error > 0.0 && input_error < 1.0) {
        return Err(FactoryError::InvalidInput(format!(
            "input T error rate {input_error} must lie in (0, 1)"
        )));
    }
    if !(required_error > 0.0) {
        return Err(FactoryError::InvalidInput(format!(
            "required T error rate {required_error} must be positive"
        )));
    }
    if max_rounds == 0 {
        return Err(FactoryError::InvalidInput("at least one distillation round required".into()));
    }
    scheme.validate()?;
    let levels = levels(scheme, params)?;
    let mut search = Search {
        units,
        levels: &levels,
        required: required_error,
        max_rounds: max_rounds as usize,
        chain: Vec::new(),
        best: None,
    };
    search.extend(input_error, false)?;
    search.best.ok_or(FactoryError::NoFeasiblePipeline {
        required: required_error,
        input: input_error,
    })
}

/// A sized fleet and the logical cycle slowdown it requires.
#[derive(Debug, Clone, PartialEq)]
pub struct SizedFleet {
    pub plan: TFactoryPlan,
    pub slowdown: f64,
}

/// Sizes the factory fleet for an algorithm running `algorithm_runtime` ns.
pub fn size_fleet(
    plan: &TFactoryPlan,
    total_t_states: u64,
    algorithm_runtime: f64,
    constraints: &TFactoryConstraints,
) -> Result<SizedFleet, FactoryError> {
    size_fleet_with_slowdown(plan, total_t_states, algorithm_runtime, 1.0, constraints)
}

/// Like [`size_fleet`], with the algorithm already stretched by
/// `base_slowdown`. If the fleet exceeds `maxTFactoryCopies` (or no run fits)
/// the slowdown grows, up to `maxLogicalCycleSlowdown`, until it fits.
#[allow(
    clippy::cast_possible_truncation,
    clippy::cast_sign_loss,
    clippy::cast_precision_loss
)]
pub fn size_fleet_with_slowdown(
    plan: &TFactoryPlan,
    total_t_states: u64,
    algorithm_runtime: f64,
    base_slowdown: f64,
    constraints: &TFactoryConstraints,
) -> Result<SizedFleet, FactoryError> {
    if !(base_slowdown >= 1.0 && base_slowdown.is_finite()) {
        return Err(FactoryError::InvalidInput(format!(
            "slowdown {base_slowdown} must be at least 1"
        )));
    }
    if !(constraints.max_logical_cycle_slowdown >= 1.0) {
        return Err(FactoryError::InvalidInput(format!(
            "maxLogicalCycleSlowdown {} must be at least 1",
            constraints.max_logical_cycle_slowdown
        )));
    }
    if !(algorithm_runtime >= 0.0 && algorithm_runtime.is_finite()) {
        return Err(FactoryError::InvalidInput(format!(
            "algorithm runtime {algorithm_runtime} must be non-negative"
        )));
    }
    let mut sized = plan.clone();
    if total_t_states == 0 {
        sized.num_copies = 0;
        sized.runs_per_copy = 0;
        return Ok(SizedFleet {
            plan: sized,
            slowdown: base_slowdown,
        });
    }
    let duration = plan.duration_per_run;
    if !(duration > 0.0) || plan.t_states_per_run == 0 {
        return Err(FactoryError::InvalidInput("factory plan produces nothing".into()));
    }

    let per_run = plan.t_states_per_run;
    let needed_runs = match constraints.max_t_factory_copies {
        Some(0) => {
            return Err(FactoryError::FactoryConstraintInfeasible {
                copies: total_t_states.div_ceil(per_run),
                max: 0,
                max_slowdown: constraints.max_logical_cycle_slowdown,
            })
        }
        Some(max) => total_t_states.div_ceil(max.saturating_mul(per_run)).max(1),
        None => 1,
    };

    let mut slowdown = base_slowdown;
    let mut runs = (base_slowdown * algorithm_runtime / duration).floor() as u64;
    if runs < needed_runs {
        let cap = constraints.max_logical_cycle_slowdown.max(base_slowdown);
        let required = needed_runs as f64 * duration / algorithm_runtime;
        if !(required <= cap) {
            if cap * algorithm_runtime < duration {
                return Err(FactoryError::RuntimeTooShort {
                    duration,
                    runtime: cap * algorithm_runtime,
                });
            }
            let runs_at_cap = (cap * algorithm_runtime / duration).floor() as u64;
            return Err(FactoryError::FactoryConstraintInfeasible {
                copies: total_t_states.div_ceil(runs_at_cap.saturating_mul(per_run)),
                max: constraints.max_t_factory_copies.unwrap_or(u64::MAX),
                max_slowdown: constraints.max_logical_cycle_slowdown,
            });
        }
        slowdown = required;
        runs = needed_runs;
    }
    sized.runs_per_copy = runs;
    sized.num_copies = total_t_states.div_ceil(runs.saturating_mul(per_run));
    Ok(SizedFleet {
        plan: sized,
        slowdown,
    })
}
