//! End-to-end estimation: budget partitioning, logical to physical
//! conversion, T-factory sizing, totals and rQOPS.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counts::{counts_from_estimates, CountsError, LogicalCounts};
use crate::layout::{estimate_layout, LayoutError, RotationSynthesis};
use crate::qec::{
    compute_code_distance, logical_qubit_profile, required_logical_error_rate, LogicalQubitProfile,
    PhysicalQubitParams, QecError, QecScheme,
};
use crate::serde_util::lenient_u64;
use crate::tfactory::{
    required_t_state_error, search_pipeline, size_fleet_with_slowdown, DistillationUnit,
    FactoryError, TFactoryConstraints, TFactoryPlan,
};

const PARTITION_TOLERANCE: f64 = 1e-12;
const MAX_SLOWDOWN_ITERATIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BudgetError {
    #[error("error budget {0} must lie in (0, 1)")]
    InvalidTotal(f64),
    #[error("explicit budget parts sum to {sum}, not the total {total}")]
    InvalidPartition { sum: f64, total: f64 },
    #[error("explicit budget needs all of logical, tStates and rotations")]
    IncompletePartition,
}

/// Failure of one pipeline stage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("error budget: {0}")]
    Budget(#[from] BudgetError),
    #[error("logical counts: {0}")]
    Counts(#[from] CountsError),
    #[error("algorithmic layout: {0}")]
    Layout(#[from] LayoutError),
    #[error("error correction: {0}")]
    Qec(#[from] QecError),
    #[error("T factories: {0}")]
    Factory(#[from] FactoryError),
    #[error("invalid input: {0}")]
    Input(String),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Budget(_) => "errorBudget",
            PipelineError::Counts(_) => "logicalCounts",
            PipelineError::Layout(_) => "layout",
            PipelineError::Qec(_) => "errorCorrection",
            PipelineError::Factory(_) => "tFactory",
            PipelineError::Input(_) => "input",
        }
    }

    /// Whether the inputs are valid but no machine satisfies them.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            PipelineError::Qec(QecError::AboveThreshold { .. } | QecError::DistanceExhausted(_))
                | PipelineError::Factory(
                    FactoryError::NoFeasiblePipeline { .. }
                        | FactoryError::FactoryConstraintInfeasible { .. }
                        | FactoryError::RuntimeTooShort { .. }
                        | FactoryError::Qec(
                            QecError::AboveThreshold { .. } | QecError::DistanceExhausted(_)
                        )
                )
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ErrorBudget {
    pub total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logical: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_states: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotations: Option<f64>,
}

impl ErrorBudget {
    pub fn uniform(total: f64) -> Self {
        Self {
            total,
            logical: None,
            t_states: None,
            rotations: None,
        }
    }

    pub fn explicit(logical: f64, t_states: f64, rotations: f64) -> Self {
        Self {
            total: logical + t_states + rotations,
            logical: Some(logical),
            t_states: Some(t_states),
            rotations: Some(rotations),
        }
    }
}

/// The budget actually assigned to each error source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BudgetPartition {
    pub logical: f64,
    pub t_states: f64,
    pub rotations: f64,
    pub total: f64,
}

/// Splits the budget into logical, distillation and synthesis shares.
///
/// Explicit parts pass through unchanged. Otherwise each share is a third of
/// the total and the shares of absent features go to the logical share.
pub fn partition_budget(
    budget: &ErrorBudget,
    has_rotations: bool,
    has_t_states: bool,
) -> Result<BudgetPartition, BudgetError> {
    let total = budget.total;
    if !(total > 0.0 && total < 1.0) {
        return Err(BudgetError::InvalidTotal(total));
    }
    match (budget.logical, budget.t_states, budget.rotations) {
        (Some(logical), Some(t_states), Some(rotations)) => {
            let sum = logical + t_states + rotations;
            let parts_ok = [logical, t_states, rotations]
                .iter()
                .all(|p| (0.0..1.0).contains(p));
            if !parts_ok || (sum - total).abs() > PARTITION_TOLERANCE {
                return Err(BudgetError::InvalidPartition { sum, total });
            }
            Ok(BudgetPartition {
                logical,
                t_states,
                rotations,
                total,
            })
        }
        (None, None, None) => {
            let third = total / 3.0;
            let t_states = if has_t_states { third } else { 0.0 };
            let rotations = if has_rotations { third } else { 0.0 };
            Ok(BudgetPartition {
                logical: total - t_states - rotations,
                t_states,
                rotations,
                total,
            })
        }
        _ => Err(BudgetError::IncompletePartition),
    }
}

/// Algorithmic figures supplied after layout, bypassing trace counting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PostLayoutEstimate {
    #[serde(deserialize_with = "lenient_u64")]
    pub logical_qubits_post_layout: u64,
    #[serde(deserialize_with = "lenient_u64")]
    pub algorithmic_depth: u64,
    #[serde(default, deserialize_with = "lenient_u64")]
    pub num_t_states: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateInput {
    Counts(LogicalCounts),
    PostLayout(PostLayoutEstimate),
}

/// Everything one estimate needs.
#[derive(Debug, Clone)]
pub struct EstimateRequest {
    pub input: EstimateInput,
    pub qubit_params: PhysicalQubitParams,
    /// Echoed in the report when the parameters came from a named profile.
    pub profile_name: Option<String>,
    pub scheme: QecScheme,
    pub budget: ErrorBudget,
    pub distillation_units: Vec<DistillationUnit>,
    pub constraints: TFactoryConstraints,
    pub rotation_synthesis: RotationSynthesis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PhysicalResourceEstimates {
    /// ns
    pub runtime: f64,
    pub rqops: f64,
    pub physical_qubits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceEstimatesBreakdown {
    pub logical_qubits_post_layout: u64,
    pub algorithmic_depth: u64,
    pub num_t_states: u64,
    pub t_states_per_rotation: u64,
    pub num_t_factory_copies: u64,
    pub algorithmic_physical_qubits: u64,
    pub t_factory_physical_qubits: u64,
    pub required_logical_error_rate: f64,
    /// `None` when the program needs no T states.
    pub required_t_state_error: Option<f64>,
    pub slowdown_applied: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogicalQubitParameters {
    pub qec_scheme: String,
    pub crossing_prefactor: f64,
    pub error_correction_threshold: f64,
    pub logical_cycle_time_formula: String,
    pub physical_qubits_per_logical_qubit_formula: String,
    pub physical_error_rate: f64,
    #[serde(flatten)]
    pub profile: LogicalQubitProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PhysicalQubitParameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub params: PhysicalQubitParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimateReport {
    pub physical_resource_estimates: PhysicalResourceEstimates,
    pub resource_estimates_breakdown: ResourceEstimatesBreakdown,
    pub logical_qubit_parameters: LogicalQubitParameters,
    pub t_factory_parameters: TFactoryPlan,
    /// `None` when post-layout figures were supplied directly.
    pub pre_layout_logical_resources: Option<LogicalCounts>,
    pub assumed_error_budget: BudgetPartition,
    pub physical_qubit_parameters: PhysicalQubitParameters,
    pub assumptions: Vec<String>,
}

impl EstimateReport {
    pub fn physical_qubits(&self) -> u64 {
        self.physical_resource_estimates.physical_qubits
    }

    /// ns
    pub fn runtime(&self) -> f64 {
        self.physical_resource_estimates.runtime
    }

    pub fn rqops(&self) -> f64 {
        self.physical_resource_estimates.rqops
    }

    pub fn code_distance(&self) -> u32 {
        self.logical_qubit_parameters.profile.code_distance
    }
}

pub fn estimate(request: &EstimateRequest) -> Result<EstimateReport, PipelineError> {
    estimate_with_slowdown(request, 1.0)
}

/// Algorithmic figures shared by both input modes.
struct Algorithmic {
    logical_qubits: u64,
    depth: u64,
    t_states: u64,
    t_per_rotation: u64,
    pre_layout: Option<LogicalCounts>,
    partition: BudgetPartition,
}

fn algorithmic(request: &EstimateRequest) -> Result<Algorithmic, PipelineError> {
    match request.input {
        EstimateInput::Counts(counts) => {
            let counts = counts_from_estimates(counts)?;
            let has_rotations = counts.rotation_count > 0;
            let has_t = has_rotations
                || counts.t_count > 0
                || counts.ccz_count > 0
                || counts.ccix_count > 0;
            let partition = partition_budget(&request.budget, has_rotations, has_t)?;
            let layout = estimate_layout(&counts, &request.rotation_synthesis, partition.rotations)?;
            Ok(Algorithmic {
                logical_qubits: layout.logical_qubits_post_layout,
                depth: layout.algorithmic_depth,
                t_states: layout.total_t_states,
                t_per_rotation: layout.t_states_per_rotation,
                pre_layout: Some(counts),
                partition,
            })
        }
        EstimateInput::PostLayout(post) => {
            let partition = partition_budget(&request.budget, false, post.num_t_states > 0)?;
            Ok(Algorithmic {
                logical_qubits: post.logical_qubits_post_layout,
                depth: post.algorithmic_depth,
                t_states: post.num_t_states,
                t_per_rotation: 0,
                pre_layout: None,
                partition,
            })
        }
    }
}

/// Runs the estimate with the algorithm stretched by at least
/// `base_slowdown`. Programs without T states never slow down.
#[allow(
    clippy::cast_precision_loss,
    clippy::cast_possible_truncation,
    clippy::cast_sign_loss
)]
pub fn estimate_with_slowdown(
    request: &EstimateRequest,
    base_slowdown: f64,
) -> Result<EstimateReport, PipelineError> {
    if !(base_slowdown >= 1.0 && base_slowdown.is_finite()) {
        return Err(PipelineError::Input(format!(
            "slowdown {base_slowdown} must be at least 1"
        )));
    }
    let params = &request.qubit_params;
    let scheme = &request.scheme;
    params.validate()?;
    scheme.validate()?;

    let alg = algorithmic(request)?;
    let partition = alg.partition;
    let physical_error_rate = params.effective_error_rate();

    // the algorithm must be correctable at all before factories are sized
    compute_code_distance(
        scheme,
        physical_error_rate,
        required_logical_error_rate(partition.logical, alg.logical_qubits.max(1), alg.depth.max(1)),
    )?;

    let factory = if alg.t_states > 0 {
        let required = required_t_state_error(partition.t_states, alg.t_states)?;
        let plan = search_pipeline(
            &request.distillation_units,
            scheme,
            params,
            params.t_gate_error_rate,
            required,
            request.constraints.max_distillation_rounds,
        )?;
        Some((required, plan))
    } else {
        None
    };

    let mut slowdown = if factory.is_some() { base_slowdown } else { 1.0 };
    let mut iterations = 0;
    let (required_logical, profile, fleet) = loop {
        iterations += 1;
        // idle cycles introduced by a slowdown still accumulate logical errors
        let cycles = ((alg.depth as f64 * slowdown).ceil() as u64).max(1);
        let required_logical =
            required_logical_error_rate(partition.logical, alg.logical_qubits.max(1), cycles);
        let d = compute_code_distance(scheme, physical_error_rate, required_logical)?;
        let profile = logical_qubit_profile(scheme, params, d)?;
        let Some((_, plan)) = &factory else {
            break (required_logical, profile, None);
        };
        let runtime = alg.depth as f64 * profile.logical_cycle_time;
        let fleet = size_fleet_with_slowdown(
            plan,
            alg.t_states,
            runtime,
            slowdown,
            &request.constraints,
        )?;
        if fleet.slowdown > slowdown && iterations < MAX_SLOWDOWN_ITERATIONS {
            slowdown = fleet.slowdown;
            continue;
        }
        slowdown = fleet.slowdown;
        break (required_logical, profile, Some(fleet.plan));
    };

    let overflow = |what: &str| PipelineError::Input(format!("{what} overflows 64 bits"));
    let algorithmic_physical_qubits = alg
        .logical_qubits
        .checked_mul(profile.physical_qubits_per_logical_qubit)
        .ok_or_else(|| overflow("algorithmic physical qubits"))?;
    let t_factory_plan = fleet.unwrap_or_else(TFactoryPlan::empty);
    let t_factory_physical_qubits = t_factory_plan
        .total_physical_qubits()
        .ok_or_else(|| overflow("T factory physical qubits"))?;
    let physical_qubits = algorithmic_physical_qubits
        .checked_add(t_factory_physical_qubits)
        .ok_or_else(|| overflow("physical qubits"))?;

    let runtime = alg.depth as f64 * profile.logical_cycle_time * slowdown;
    let rqops = alg.logical_qubits as f64 * profile.logical_clock_speed;

    Ok(EstimateReport {
        physical_resource_estimates: PhysicalResourceEstimates {
            runtime,
            rqops,
            physical_qubits,
        },
        resource_estimates_breakdown: ResourceEstimatesBreakdown {
            logical_qubits_post_layout: alg.logical_qubits,
            algorithmic_depth: alg.depth,
            num_t_states: alg.t_states,
            t_states_per_rotation: alg.t_per_rotation,
            num_t_factory_copies: t_factory_plan.num_copies,
            algorithmic_physical_qubits,
            t_factory_physical_qubits,
            required_logical_error_rate: required_logical,
            required_t_state_error: factory.as_ref().map(|(r, _)| *r),
            slowdown_applied: slowdown,
        },
        logical_qubit_parameters: LogicalQubitParameters {
            qec_scheme: scheme.name.clone(),
            crossing_prefactor: scheme.crossing_prefactor,
            error_correction_threshold: scheme.error_correction_threshold,
            logical_cycle_time_formula: scheme.logical_cycle_time.source().to_string(),
            physical_qubits_per_logical_qubit_formula: scheme
                .physical_qubits_per_logical_qubit
                .source()
                .to_string(),
            physical_error_rate,
            profile,
        },
        t_factory_parameters: t_factory_plan,
        pre_layout_logical_resources: alg.pre_layout,
        assumed_error_budget: partition,
        physical_qubit_parameters: PhysicalQubitParameters {
            name: request.profile_name.clone(),
            params: params.clone(),
        },
        assumptions: assumptions(request, alg.pre_layout.is_none()),
    })
}

fn assumptions(request: &EstimateRequest, post_layout: bool) -> Vec<String> {
    let rs = request.rotation_synthesis;
    let mut out = vec![
        "Runtime excludes classical processing and T-factory warm-up; factories run concurrently with the algorithm.".to_string(),
        "The physical error rate entering the code distance is the largest of the Clifford, readout and idle error rates.".to_string(),
        "Logical error rate per qubit and cycle is crossingPrefactor * (p / threshold)^((d + 1) / 2).".to_string(),
        "Distillation failures are paid for by expected retries: a round takes duration / (1 - failureProbability).".to_string(),
        "A logical cycle slowdown stretches runtime without changing the logical clock speed; the stretched cycles count towards the logical error budget.".to_string(),
    ];
    if post_layout {
        out.push("Post-layout logical qubits and algorithmic depth were supplied directly; no pre-layout counts are available.".to_string());
    } else {
        out.push("Layout uses 2Q + ceil(sqrt(8Q)) + 1 logical qubits for Q algorithmic qubits.".to_string());
        out.push(format!(
            "Each rotation costs ceil({} * log2(rotations / synthesisBudget) + {}) T states.",
            rs.a, rs.b
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrontierPoint {
    pub slowdown: f64,
    pub physical_qubits: u64,
    /// ns
    pub runtime: f64,
    pub num_t_factory_copies: u64,
    pub code_distance: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SkippedPoint {
    pub slowdown: f64,
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Frontier {
    /// Pareto-optimal points ordered by increasing runtime.
    pub points: Vec<FrontierPoint>,
    pub skipped: Vec<SkippedPoint>,
}

/// Qubit/runtime trade-off: one estimate per slowdown factor, pruned to the
/// non-dominated points.
pub fn frontier(request: &EstimateRequest, slowdown_grid: &[f64]) -> Result<Frontier, PipelineError> {
    if slowdown_grid.is_empty() {
        return Err(PipelineError::Input("slowdown grid is empty".into()));
    }
    if slowdown_grid.iter().any(|f| !(*f >= 1.0 && f.is_finite())) {
        return Err(PipelineError::Input("slowdown factors must be at least 1".into()));
    }
    if slowdown_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(PipelineError::Input("slowdown grid must be sorted ascending".into()));
    }

    let results: Vec<_> = slowdown_grid
        .par_iter()
        .map(|&f| (f, estimate_with_slowdown(request, f)))
        .collect();

    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (f, result) in results {
        match result {
            Ok(report) => points.push(FrontierPoint {
                slowdown: report.resource_estimates_breakdown.slowdown_applied,
                physical_qubits: report.physical_qubits(),
                runtime: report.runtime(),
                num_t_factory_copies: report.resource_estimates_breakdown.num_t_factory_copies,
                code_distance: report.code_distance(),
            }),
            Err(err) => skipped.push(SkippedPoint {
                slowdown: f,
                stage: err.stage().to_string(),
                error: err.to_string(),
            }),
        }
    }
    Ok(Frontier {
        points: pareto_prune(points),
        skipped,
    })
}

/// Keeps points not dominated in (runtime, qubits); equal points collapse to
/// the first.
pub fn pareto_prune(mut points: Vec<FrontierPoint>) -> Vec<FrontierPoint> {
    points.sort_by(|a, b| {
        a.runtime
            .total_cmp(&b.runtime)
            .then(a.physical_qubits.cmp(&b.physical_qubits))
    });
    let mut kept: Vec<FrontierPoint> = Vec::new();
    for p in points {
        if kept.last().is_none_or(|last| p.physical_qubits < last.physical_qubits) {
            kept.push(p);
        }
    }
    kept
}
