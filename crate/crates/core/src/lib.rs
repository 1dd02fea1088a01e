//! Physical resource estimation for fault-tolerant quantum programs.
//!
//! Logical counts (or a gate trace) are mapped through a layout model, a
//! QEC scheme and a T-factory search into physical qubits and runtime.

// `!(x > 0.0)` style checks deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod counts;
pub mod formula;
pub mod job;
pub mod layout;
pub mod pipeline;
pub mod qec;
pub mod tfactory;

mod serde_util;

pub use counts::{count_trace, CountsError, LogicalCounts, TraceEvent};
pub use formula::{parse_formula, Expr, Formula, FormulaError, VariableEnvironment};
pub use job::{ConfigError, HardwareProfile, JobSpec, ProfileRegistry};
pub use layout::{estimate_layout, AlgorithmicLogicalEstimate, RotationSynthesis};
pub use pipeline::{
    estimate, estimate_with_slowdown, frontier, ErrorBudget, EstimateInput, EstimateReport,
    EstimateRequest, Frontier, FrontierPoint, PipelineError,
};
pub use qec::{InstructionSet, PhysicalQubitParams, QecScheme};
pub use tfactory::{DistillationUnit, TFactoryConstraints, TFactoryPlan};
