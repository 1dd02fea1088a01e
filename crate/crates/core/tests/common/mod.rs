//! Independent oracles and generators shared by the integration tests.
//!
//! Only the formula evaluator is reused (to evaluate distillation-unit
//! formulas); everything else is computed independently of the library.

#![allow(
    dead_code,
    clippy::too_many_arguments,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::manual_range_contains,
    // exponents are written as (d + 1) / 2 to match the crossing model
    clippy::manual_div_ceil
)]

use std::collections::{BTreeSet, HashMap};

use ftqc_core::formula::VariableEnvironment;
use ftqc_core::qec::{InstructionSet, PhysicalQubitParams, QecScheme};
use ftqc_core::tfactory::{Applicability, DistillationUnit};
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// Formulas

/// Evaluates formula source text directly while parsing it.
///
/// Returns `None` for any evaluation error. The second component is an
/// absolute bound on accumulated rounding, used as the comparison tolerance;
/// it is infinite when a `ceil`/`floor` argument sits within that bound of an
/// integer, since the result is then not stable under rounding.
pub fn reference_eval(src: &str, vars: &HashMap<String, f64>) -> Option<(f64, f64)> {
    let mut r = RefParser {
        s: src.chars().filter(|c| !c.is_whitespace()).collect(),
        i: 0,
        vars,
    };
    let (v, slack) = r.expr()?;
    let slack = if slack.is_nan() { f64::INFINITY } else { slack };
    (r.i == r.s.len() && v.is_finite()).then_some((v, slack))
}

const EPS: f64 = 4.0 * f64::EPSILON;

struct RefParser<'a> {
    s: Vec<char>,
    i: usize,
    vars: &'a HashMap<String, f64>,
}

impl RefParser<'_> {
    fn eat(&mut self, c: char) -> bool {
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Option<(f64, f64)> {
        let mut acc = self.term()?;
        loop {
            let sign = if self.eat('+') {
                1.0
            } else if self.eat('-') {
                -1.0
            } else {
                return Some(acc);
            };
            let rhs = self.term()?;
            let v = acc.0 + sign * rhs.0;
            acc = (v, acc.1 + rhs.1 + EPS * v.abs());
        }
    }

    fn term(&mut self) -> Option<(f64, f64)> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                let rhs = self.factor()?;
                let v = acc.0 * rhs.0;
                acc = (v, acc.1 * rhs.0.abs() + rhs.1 * acc.0.abs() + acc.1 * rhs.1 + EPS * v.abs());
            } else if self.eat('/') {
                let rhs = self.factor()?;
                if rhs.0 == 0.0 {
                    return None;
                }
                let v = acc.0 / rhs.0;
                let denom = (rhs.0.abs() - rhs.1).max(f64::MIN_POSITIVE);
                acc = (v, (acc.1 + v.abs() * rhs.1) / denom + EPS * v.abs());
            } else {
                return Some(acc);
            }
        }
    }

    fn factor(&mut self) -> Option<(f64, f64)> {
        let base = self.unary()?;
        if !self.eat('^') {
            return Some(base);
        }
        let exp = self.factor()?;
        if base.0 < 0.0 && exp.0.fract() != 0.0 {
            return None;
        }
        let v = base.0.powf(exp.0);
        if !v.is_finite() {
            return None;
        }
        // d(b^e) = e b^(e-1) db + ln(b) b^e de
        let db = if base.0 == 0.0 {
            base.1
        } else {
            (exp.0 * v / base.0).abs() * base.1
        };
        let de = if base.0 > 0.0 {
            (base.0.ln() * v).abs() * exp.1
        } else {
            0.0
        };
        Some((v, 2.0 * (db + de) + 16.0 * EPS * v.abs()))
    }

    fn unary(&mut self) -> Option<(f64, f64)> {
        if self.eat('-') {
            let (v, e) = self.unary()?;
            return Some((-v, e));
        }
        self.primary()
    }

    fn primary(&mut self) -> Option<(f64, f64)> {
        let c = *self.s.get(self.i)?;
        if c == '(' {
            self.i += 1;
            let v = self.expr()?;
            return self.eat(')').then_some(v);
        }
        if c.is_ascii_digit() {
            let start = self.i;
            while self
                .s
                .get(self.i)
                .is_some_and(|c| c.is_ascii_digit() || *c == '.')
            {
                self.i += 1;
            }
            if matches!(self.s.get(self.i), Some('e' | 'E')) {
                self.i += 1;
                if matches!(self.s.get(self.i), Some('+' | '-')) {
                    self.i += 1;
                }
                while self.s.get(self.i).is_some_and(char::is_ascii_digit) {
                    self.i += 1;
                }
            }
            let text: String = self.s[start..self.i].iter().collect();
            return text.parse().ok().map(|v| (v, 0.0));
        }
        if c.is_ascii_alphabetic() {
            let start = self.i;
            while self
                .s
                .get(self.i)
                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
            {
                self.i += 1;
            }
            let name: String = self.s[start..self.i].iter().collect();
            if self.eat('(') {
                let (x, e) = self.expr()?;
                if !self.eat(')') {
                    return None;
                }
                // NaN slack (from an unstable operand) counts as unstable
                let near_integer = !((x - x.round()).abs() > e);
                return match name.as_str() {
                    "ceil" => Some((x.ceil(), if near_integer { f64::INFINITY } else { 0.0 })),
                    "floor" => Some((x.floor(), if near_integer { f64::INFINITY } else { 0.0 })),
                    "sqrt" if x >= 0.0 => {
                        let v = x.sqrt();
                        let slope = if v > 0.0 { e / (2.0 * v) } else { e.sqrt() };
                        Some((v, slope + EPS * v))
                    }
                    "log2" if x > 0.0 => {
                        let v = x.log2();
                        let lo = (x - e).max(f64::MIN_POSITIVE);
                        Some((v, e / (lo * std::f64::consts::LN_2) + EPS * v.abs()))
                    }
                    _ => None,
                };
            }
            return self.vars.get(&name).map(|v| (*v, 0.0));
        }
        None
    }
}

pub const VAR_NAMES: [&str; 4] = ["codeDistance", "x", "inputErrorRate", "t_2"];

/// Random formula source text of depth at most `depth`, with random spacing
/// and redundant parentheses. Literals are non-negative.
pub fn random_formula(rng: &mut impl Rng, depth: u32) -> String {
    let ws = |rng: &mut dyn rand::RngCore| -> &'static str {
        [" ", "", "", "  "][rng.gen_range(0..4)]
    };
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => rng.gen_range(0..20).to_string(),
            1 => format!("{:.3}", rng.gen_range(0.0..10.0)),
            2 => format!("{}e-{}", rng.gen_range(1..10), rng.gen_range(1..4)),
            _ => VAR_NAMES.choose(rng).unwrap().to_string(),
        };
    }
    let sub = |rng: &mut _| random_formula(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => format!("({})", sub(rng)),
        1 => format!("-{}", atom(rng, depth - 1)),
        2 => {
            let f = ["ceil", "floor", "sqrt", "log2"].choose(rng).unwrap();
            format!("{f}({})", sub(rng))
        }
        3 => {
            // keep exponents small so powers stay finite
            let e = ["2", "3", "0.5", "1", "0"].choose(rng).unwrap();
            format!("{}{}^{}{e}", atom(rng, depth - 1), ws(rng), ws(rng))
        }
        n => {
            let op = ["+", "-", "*", "/", "+"][n - 4];
            format!("{}{}{op}{}{}", sub(rng), ws(rng), ws(rng), sub(rng))
        }
    }
}

fn atom(rng: &mut impl Rng, depth: u32) -> String {
    let inner = random_formula(rng, depth);
    if inner.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
        inner
    } else {
        format!("({inner})")
    }
}

pub fn random_bindings(rng: &mut impl Rng) -> (HashMap<String, f64>, VariableEnvironment) {
    let mut map = HashMap::new();
    let mut env = VariableEnvironment::new();
    for name in VAR_NAMES {
        let v = rng.gen_range(0.01..20.0);
        map.insert(name.to_string(), v);
        env.bind(name, v).unwrap();
    }
    (map, env)
}

// ---------------------------------------------------------------------------
// Traces

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Alloc,
    Release,
    T,
    Rz,
    Ccz,
    Ccix,
    Measure,
    Clifford,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Alloc => "alloc",
            Op::Release => "release",
            Op::T => "t",
            Op::Rz => "rz",
            Op::Ccz => "ccz",
            Op::Ccix => "ccix",
            Op::Measure => "measure",
            Op::Clifford => "clifford",
        }
    }
}

/// Random well-formed trace of at most `max_len` events over qubit ids
/// `0..8`. Released ids may be re-allocated.
pub fn random_trace(rng: &mut impl Rng, max_len: usize) -> Vec<(Op, Vec<u64>)> {
    let len = rng.gen_range(0..=max_len);
    let mut live: BTreeSet<u64> = BTreeSet::new();
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let free: Vec<u64> = (0..8).filter(|q| !live.contains(q)).collect();
        let live_v: Vec<u64> = live.iter().copied().collect();
        let pick = |rng: &mut dyn rand::RngCore, n: usize| -> Vec<u64> {
            live_v.choose_multiple(rng, n).copied().collect()
        };
        let op = [
            Op::Alloc,
            Op::Release,
            Op::T,
            Op::Rz,
            Op::Rz,
            Op::Ccz,
            Op::Ccix,
            Op::Measure,
            Op::Clifford,
        ]
        .choose(rng)
        .copied()
        .unwrap();
        let qubits = match op {
            Op::Alloc if !free.is_empty() => {
                let n = rng.gen_range(1..=free.len().min(3));
                let q: Vec<u64> = free.choose_multiple(rng, n).copied().collect();
                live.extend(&q);
                q
            }
            Op::Release if live.len() > 1 => {
                let n = rng.gen_range(1..live.len());
                let q = pick(rng, n);
                for x in &q {
                    live.remove(x);
                }
                q
            }
            Op::T | Op::Rz | Op::Measure if !live.is_empty() => pick(rng, 1),
            Op::Ccz | Op::Ccix if live.len() >= 3 => pick(rng, 3),
            Op::Clifford if !live.is_empty() => {
                let n = rng.gen_range(1..=live.len().min(2));
                pick(rng, n)
            }
            _ => continue,
        };
        out.push((op, qubits));
    }
    out
}

pub fn trace_json_lines(trace: &[(Op, Vec<u64>)]) -> String {
    trace
        .iter()
        .map(|(op, q)| format!("{{\"op\":\"{}\",\"q\":{:?}}}\n", op.name(), q))
        .collect()
}

/// Quantities obtained by replaying a trace event by event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Replay {
    pub width: u64,
    pub t: u64,
    pub rz: u64,
    pub ccz: u64,
    pub ccix: u64,
    pub measure: u64,
    pub rotation_layers: u64,
}

/// Brute-force replay. Layers are assigned by scanning all earlier events
/// for each event (quadratic), rather than tracking per-wire state.
pub fn replay(trace: &[(Op, Vec<u64>)]) -> Replay {
    let non_clifford = |op: Op| matches!(op, Op::T | Op::Rz | Op::Ccz | Op::Ccix);
    let mut layer_of: Vec<u64> = vec![0; trace.len()];
    let mut live = BTreeSet::new();
    let mut r = Replay {
        width: 0,
        t: 0,
        rz: 0,
        ccz: 0,
        ccix: 0,
        measure: 0,
        rotation_layers: 0,
    };
    for (i, (op, qs)) in trace.iter().enumerate() {
        match op {
            Op::Alloc => {
                live.extend(qs.iter().copied());
                r.width = r.width.max(live.len() as u64);
            }
            Op::Release => {
                for q in qs {
                    live.remove(q);
                }
            }
            Op::T => r.t += 1,
            Op::Rz => r.rz += 1,
            Op::Ccz => r.ccz += 1,
            Op::Ccix => r.ccix += 1,
            Op::Measure => r.measure += 1,
            Op::Clifford => {}
        }
        if non_clifford(*op) {
            let mut deepest = 0;
            for j in 0..i {
                let (op_j, qs_j) = &trace[j];
                if non_clifford(*op_j) && qs_j.iter().any(|q| qs.contains(q)) {
                    deepest = deepest.max(layer_of[j]);
                }
            }
            layer_of[i] = deepest + 1;
        }
    }
    let rz_layers: BTreeSet<u64> = trace
        .iter()
        .zip(&layer_of)
        .filter(|((op, _), _)| *op == Op::Rz)
        .map(|(_, l)| *l)
        .collect();
    r.rotation_layers = rz_layers.len() as u64;
    r
}

/// Logical cycles and T states of a replayed program, summed per event:
/// every measurement, rotation and T gate takes one cycle, every CCZ/CCiX
/// three cycles and four T states, every rotation `t_per_rotation` T states,
/// and each rotation-bearing layer `t_per_rotation` extra cycles.
pub fn replay_cost(r: &Replay, t_per_rotation: u64) -> (u64, u64) {
    let mut cycles = 0;
    let mut states = 0;
    for _ in 0..r.measure {
        cycles += 1;
    }
    for _ in 0..r.t {
        cycles += 1;
        states += 1;
    }
    for _ in 0..r.rz {
        cycles += 1;
        states += t_per_rotation;
    }
    for _ in 0..(r.ccz + r.ccix) {
        cycles += 3;
        states += 4;
    }
    for _ in 0..r.rotation_layers {
        cycles += t_per_rotation;
    }
    (cycles, states)
}

// ---------------------------------------------------------------------------
// Hardware and units

pub fn maj_ns_e4() -> PhysicalQubitParams {
    PhysicalQubitParams {
        instruction_set: InstructionSet::Majorana,
        one_qubit_gate_time: None,
        two_qubit_gate_time: None,
        one_qubit_measurement_time: Some(100.0),
        two_qubit_measurement_time: Some(100.0),
        t_gate_time: 100.0,
        clifford_error_rate: 1e-4,
        readout_error_rate: 1e-4,
        t_gate_error_rate: 0.05,
        idle_error_rate: None,
    }
}

pub fn gate_ns(p: f64) -> PhysicalQubitParams {
    PhysicalQubitParams {
        instruction_set: InstructionSet::GateBased,
        one_qubit_gate_time: Some(50.0),
        two_qubit_gate_time: Some(50.0),
        one_qubit_measurement_time: Some(100.0),
        two_qubit_measurement_time: None,
        t_gate_time: 50.0,
        clifford_error_rate: p,
        readout_error_rate: p,
        t_gate_error_rate: p,
        idle_error_rate: None,
    }
}

pub fn unit(name: &str, inputs: u64, outputs: u64, fail: &str, out: &str, qubits: &str, dur: &str, app: Applicability) -> DistillationUnit {
    DistillationUnit {
        name: name.into(),
        num_input_ts: inputs,
        num_output_ts: outputs,
        failure_probability_formula: fail.parse().unwrap(),
        output_error_rate_formula: out.parse().unwrap(),
        physical_qubits_formula: qubits.parse().unwrap(),
        duration_formula: dur.parse().unwrap(),
        applicability: app,
    }
}

/// Result of exhaustive pipeline enumeration: (footprint, duration, rounds).
pub type OracleBest = Option<(u64, f64, usize)>;

/// Enumerates every sequence of (unit, level) of length `1..=max_rounds`
/// with an odometer, evaluates each from scratch and keeps the best feasible
/// one under the (footprint, duration, rounds) order.
///
/// Level 0 is bare physical qubits; level `k` is distance `2k + 1`. A
/// physical round may not follow a logical round, every round must strictly
/// improve its input and fail with probability below one.
pub fn exhaustive_pipeline(
    units: &[DistillationUnit],
    scheme: &QecScheme,
    params: &PhysicalQubitParams,
    input_error: f64,
    required: f64,
    max_rounds: usize,
) -> OracleBest {
    let distances: Vec<u32> = std::iter::once(1)
        .chain((3..=scheme.max_code_distance).step_by(2))
        .collect();
    let choices: Vec<(usize, u32)> = (0..units.len())
        .flat_map(|u| distances.iter().map(move |&d| (u, d)))
        .collect();
    let mut best: OracleBest = None;
    for len in 1..=max_rounds {
        let mut idx = vec![0usize; len];
        loop {
            let chain: Vec<(usize, u32)> = idx.iter().map(|&i| choices[i]).collect();
            if let Some(c) = evaluate_chain(units, scheme, params, input_error, required, &chain) {
                let better = match best {
                    None => true,
                    Some(b) => (c.0, c.1, c.2).partial_cmp(&(b.0, b.1, b.2)) == Some(std::cmp::Ordering::Less),
                };
                if better {
                    best = Some(c);
                }
            }
            // odometer increment
            let mut k = 0;
            loop {
                if k == len {
                    break;
                }
                idx[k] += 1;
                if idx[k] < choices.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == len {
                break;
            }
        }
    }
    best
}

fn level_env(scheme: &QecScheme, params: &PhysicalQubitParams, d: u32) -> VariableEnvironment {
    let mut env = VariableEnvironment::new();
    let times = [
        ("oneQubitGateTime", params.one_qubit_gate_time),
        ("twoQubitGateTime", params.two_qubit_gate_time),
        ("oneQubitMeasurementTime", params.one_qubit_measurement_time),
        ("twoQubitMeasurementTime", params.two_qubit_measurement_time),
    ];
    for (name, t) in times {
        if let Some(t) = t {
            env.bind(name, t).unwrap();
        }
    }
    env.bind("codeDistance", f64::from(d)).unwrap();
    if d == 1 {
        let slowest = times
            .iter()
            .filter_map(|(_, t)| *t)
            .chain([params.t_gate_time])
            .fold(0.0, f64::max);
        env.bind("physicalQubitsPerLogicalQubit", 1.0).unwrap();
        env.bind("logicalCycleTime", slowest).unwrap();
        env.bind("cliffordErrorRate", params.clifford_error_rate).unwrap();
    } else {
        let qubits = scheme.physical_qubits_per_logical_qubit.evaluate(&env).unwrap().ceil();
        let cycle = scheme.logical_cycle_time.evaluate(&env).unwrap();
        let p = params
            .clifford_error_rate
            .max(params.readout_error_rate)
            .max(params.idle_error_rate.unwrap_or(0.0));
        let logical = scheme.crossing_prefactor
            * (p / scheme.error_correction_threshold).powi(((d + 1) / 2) as i32);
        env.bind("physicalQubitsPerLogicalQubit", qubits).unwrap();
        env.bind("logicalCycleTime", cycle).unwrap();
        env.bind("cliffordErrorRate", logical).unwrap();
    }
    env
}

fn evaluate_chain(
    units: &[DistillationUnit],
    scheme: &QecScheme,
    params: &PhysicalQubitParams,
    input_error: f64,
    required: f64,
    chain: &[(usize, u32)],
) -> Option<(u64, f64, usize)> {
    let mut seen_logical = false;
    let mut error = input_error;
    let mut per_round = Vec::new();
    for &(u, d) in chain {
        let unit = &units[u];
        let allowed = match unit.applicability {
            Applicability::PhysicalOnly => d == 1,
            Applicability::LogicalOnly => d > 1,
            Applicability::Both => true,
        };
        if !allowed || (d == 1 && seen_logical) {
            return None;
        }
        seen_logical |= d > 1;
        let mut env = level_env(scheme, params, d);
        env.bind("inputErrorRate", error).unwrap();
        let out = unit.output_error_rate_formula.evaluate(&env).ok()?;
        let fail = unit.failure_probability_formula.evaluate(&env).ok()?;
        if !(out >= 0.0 && out < error && fail >= 0.0 && fail < 1.0) {
            return None;
        }
        let qubits = unit.physical_qubits_formula.evaluate(&env).ok()?.ceil() as u64;
        let duration = unit.duration_formula.evaluate(&env).ok()? / (1.0 - fail);
        per_round.push((u, qubits, duration));
        error = out;
    }
    if error > required {
        return None;
    }
    // units needed per round, from a single unit in the last round
    let mut n = vec![1u64; per_round.len()];
    for k in (0..per_round.len() - 1).rev() {
        let need = n[k + 1] * units[per_round[k + 1].0].num_input_ts;
        let out = units[per_round[k].0].num_output_ts;
        n[k] = need.div_ceil(out);
    }
    let footprint = per_round.iter().zip(&n).map(|(r, n)| r.1 * n).max()?;
    let duration: f64 = per_round.iter().map(|r| r.2).sum();
    Some((footprint, duration, per_round.len()))
}

/// Smallest odd `d >= 3` meeting `target` by direct scan, or `None`.
pub fn scan_distance(a: f64, threshold: f64, p: f64, target: f64, max: u32) -> Option<u32> {
    (3..=max)
        .step_by(2)
        .find(|&d| a * (p / threshold).powi(((d + 1) / 2) as i32) <= target)
}
