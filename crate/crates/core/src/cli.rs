//! `ftqc` command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration error,
//! 3 infeasible estimate.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::job::{read_json, set_dotted, ConfigError, JobSpec, ProfileRegistry, ResolveError};
use crate::pipeline::{estimate, frontier, EstimateReport, EstimateRequest, PipelineError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Pipeline(#[from] PipelineError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<ResolveError> for CliError {
    fn from(err: ResolveError) -> Self {
        match err {
            ResolveError::Config(e) => CliError::Config(e),
            ResolveError::Counts(e) => CliError::Pipeline(e.into()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Pipeline(e) if e.is_infeasible() => 3,
            CliError::Pipeline(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    /// Machine-readable form written to stderr on failure.
    pub fn to_json(&self) -> Value {
        let (kind, stage) = match self {
            CliError::Config(_) => ("ConfigError", None),
            CliError::Pipeline(e) if e.is_infeasible() => ("InfeasibleEstimate", Some(e.stage())),
            CliError::Pipeline(e) => ("EstimateError", Some(e.stage())),
            CliError::Internal(_) => ("InternalError", None),
        };
        json!({
            "error": {
                "kind": kind,
                "stage": stage,
                "message": self.to_string(),
                "exitCode": self.exit_code(),
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Pretty-printed JSON.
    Structured,
    /// CSV.
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "ftqc", version, about = "Physical resource estimates for fault-tolerant quantum programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate physical resources for one job.
    Estimate {
        #[arg(long)]
        job: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "structured")]
        format: Format,
    },
    /// Re-run a job for each value of one numeric parameter.
    Sweep {
        #[arg(long)]
        job: PathBuf,
        /// Dotted path of the parameter, e.g. `errorBudget.total`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trade T-factory qubits for runtime over a grid of slowdown factors.
    Frontier {
        #[arg(long)]
        job: PathBuf,
        #[arg(long = "slowdown-grid", value_delimiter = ',', num_args = 1..)]
        slowdown_grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "structured")]
        format: Format,
    },
    /// List the hardware profiles.
    Profiles {
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let text = err.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "{}", err.to_json());
            err.exit_code()
        }
    }
}

fn execute(command: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    let profiles = ProfileRegistry::load()?;
    match command {
        Command::Estimate { job, out, format } => {
            let text = cmd_estimate(job, &profiles, *format)?;
            emit(out.as_deref(), &text, stdout)
        }
        Command::Sweep {
            job,
            param,
            values,
            out,
        } => {
            let text = cmd_sweep(job, param, values, &profiles)?;
            emit(out.as_deref(), &text, stdout)
        }
        Command::Frontier {
            job,
            slowdown_grid,
            out,
            format,
        } => {
            let text = cmd_frontier(job, slowdown_grid, &profiles, *format)?;
            emit(out.as_deref(), &text, stdout)
        }
        Command::Profiles { format } => {
            let text = cmd_profiles(&profiles, *format)?;
            emit(None, &text, stdout)
        }
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            ConfigError::File {
                path: path.display().to_string(),
                message: e.to_string(),
            }
            .into()
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(e.to_string())),
    }
}

fn job_dir(job_path: &Path) -> &Path {
    job_path.parent().unwrap_or(Path::new("."))
}

fn load_request(job_path: &Path, profiles: &ProfileRegistry) -> Result<EstimateRequest, CliError> {
    let spec = JobSpec::from_path(job_path)?;
    Ok(spec.resolve(job_dir(job_path), profiles)?)
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn csv_text(write_rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    write_rows(&mut writer).map_err(|e| CliError::Internal(e.to_string()))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

/// Flattens a report into `metric,value` rows.
pub fn report_table(report: &EstimateReport) -> Result<String, CliError> {
    fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
        match value {
            Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    flatten(&key, v, rows);
                }
            }
            Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    flatten(&format!("{prefix}.{i}"), v, rows);
                }
            }
            Value::String(s) => rows.push((prefix.to_string(), s.clone())),
            other => rows.push((prefix.to_string(), other.to_string())),
        }
    }
    let value = serde_json::to_value(report).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut rows = Vec::new();
    flatten("", &value, &mut rows);
    csv_text(|w| {
        w.write_record(["metric", "value"])?;
        for (k, v) in &rows {
            w.write_record([k, v])?;
        }
        Ok(())
    })
}

pub fn cmd_estimate(
    job_path: &Path,
    profiles: &ProfileRegistry,
    format: Format,
) -> Result<String, CliError> {
    let request = load_request(job_path, profiles)?;
    let report = estimate(&request)?;
    match format {
        Format::Structured => to_pretty_json(&report),
        Format::Table => report_table(&report),
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub result: Result<EstimateReport, String>,
}

/// Runs the job template once per value of the parameter at `param`.
pub fn sweep(
    template: &Value,
    base_dir: &Path,
    param: &str,
    values: &[String],
    profiles: &ProfileRegistry,
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(ConfigError::Invalid("sweep needs at least one value".into()).into());
    }
    let mut jobs = Vec::with_capacity(values.len());
    for raw in values {
        let raw = raw.trim();
        let number: Value = serde_json::from_str(raw)
            .ok()
            .filter(Value::is_number)
            .ok_or_else(|| ConfigError::Invalid(format!("sweep value `{raw}` is not a number")))?;
        let mut job = template.clone();
        set_dotted(&mut job, param, number)?;
        jobs.push((raw.to_string(), job));
    }
    Ok(jobs
        .into_par_iter()
        .map(|(value, job)| {
            let result = JobSpec::from_value(job)
                .map_err(CliError::from)
                .and_then(|spec| Ok(spec.resolve(base_dir, profiles)?))
                .and_then(|request| Ok(estimate(&request)?))
                .map_err(|e| e.to_string());
            SweepRow { value, result }
        })
        .collect())
}

pub fn sweep_table(rows: &[SweepRow]) -> Result<String, CliError> {
    csv_text(|w| {
        w.write_record([
            "value",
            "physicalQubits",
            "runtime_ns",
            "codeDistance",
            "rqops",
            "numTFactoryCopies",
            "error",
        ])?;
        for row in rows {
            match &row.result {
                Ok(r) => w.write_record([
                    row.value.clone(),
                    r.physical_qubits().to_string(),
                    r.runtime().to_string(),
                    r.code_distance().to_string(),
                    r.rqops().to_string(),
                    r.resource_estimates_breakdown.num_t_factory_copies.to_string(),
                    String::new(),
                ])?,
                Err(e) => w.write_record([
                    row.value.as_str(),
                    "",
                    "",
                    "",
                    "",
                    "",
                    e.as_str(),
                ])?,
            }
        }
        Ok(())
    })
}

pub fn cmd_sweep(
    job_path: &Path,
    param: &str,
    values: &[String],
    profiles: &ProfileRegistry,
) -> Result<String, CliError> {
    let template = read_json(job_path)?;
    let rows = sweep(&template, job_dir(job_path), param, values, profiles)?;
    sweep_table(&rows)
}

pub fn cmd_frontier(
    job_path: &Path,
    grid: &[f64],
    profiles: &ProfileRegistry,
    format: Format,
) -> Result<String, CliError> {
    let request = load_request(job_path, profiles)?;
    let frontier = frontier(&request, grid).map_err(|e| match e {
        PipelineError::Input(msg) => CliError::Config(ConfigError::Invalid(msg)),
        other => other.into(),
    })?;
    match format {
        Format::Structured => to_pretty_json(&frontier),
        Format::Table => csv_text(|w| {
            w.write_record([
                "slowdown",
                "physicalQubits",
                "runtime_ns",
                "numTFactoryCopies",
                "codeDistance",
            ])?;
            for p in &frontier.points {
                w.write_record([
                    p.slowdown.to_string(),
                    p.physical_qubits.to_string(),
                    p.runtime.to_string(),
                    p.num_t_factory_copies.to_string(),
                    p.code_distance.to_string(),
                ])?;
            }
            Ok(())
        }),
    }
}

pub fn cmd_profiles(profiles: &ProfileRegistry, format: Format) -> Result<String, CliError> {
    match format {
        Format::Structured => to_pretty_json(&profiles.iter().collect::<Vec<_>>()),
        Format::Table => {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            csv_text(|w| {
                w.write_record([
                    "name",
                    "instructionSet",
                    "oneQubitGateTime",
                    "twoQubitGateTime",
                    "oneQubitMeasurementTime",
                    "twoQubitMeasurementTime",
                    "tGateTime",
                    "cliffordErrorRate",
                    "readoutErrorRate",
                    "tGateErrorRate",
                    "idleErrorRate",
                    "defaultScheme",
                ])?;
                for p in profiles.iter() {
                    let q = &p.qubit_params;
                    let isa = serde_json::to_value(q.instruction_set)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default();
                    w.write_record([
                        p.name.clone(),
                        isa,
                        opt(q.one_qubit_gate_time),
                        opt(q.two_qubit_gate_time),
                        opt(q.one_qubit_measurement_time),
                        opt(q.two_qubit_measurement_time),
                        q.t_gate_time.to_string(),
                        q.clifford_error_rate.to_string(),
                        q.readout_error_rate.to_string(),
                        q.t_gate_error_rate.to_string(),
                        opt(q.idle_error_rate),
                        p.default_scheme.clone(),
                    ])?;
                }
                Ok(())
            })
        }
    }
}
