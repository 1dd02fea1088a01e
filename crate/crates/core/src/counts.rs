//! Pre-layout logical resource counting over gate-event traces.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::serde_util::lenient_u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountsError {
    /// The event touches a qubit that is not currently allocated, either
    /// because it was released or because it was never allocated.
    #[error("event {event_index} uses qubit {qubit} which is not allocated")]
    UseAfterRelease { qubit: u64, event_index: usize },
    #[error("event {event_index} allocates qubit {qubit} which is already allocated")]
    DoubleAlloc { qubit: u64, event_index: usize },
    #[error("event {event_index} has the wrong number of qubit operands")]
    ArityMismatch { event_index: usize },
    #[error("invalid logical counts: {field}")]
    InvalidCounts { field: &'static str },
    #[error("trace line {line}: {message}")]
    TraceFormat { line: usize, message: String },
    #[error("cannot read trace: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Alloc,
    Release,
    T,
    Rz,
    Ccz,
    Ccix,
    Measure,
    Clifford,
}

impl EventKind {
    /// T, rotation, CCZ and CCiX events occupy a non-Clifford layer.
    pub fn is_non_clifford(self) -> bool {
        matches!(self, EventKind::T | EventKind::Rz | EventKind::Ccz | EventKind::Ccix)
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            EventKind::Alloc | EventKind::Release => n >= 1,
            EventKind::T | EventKind::Rz | EventKind::Measure => n == 1,
            EventKind::Ccz | EventKind::Ccix => n == 3,
            EventKind::Clifford => (1..=2).contains(&n),
        }
    }
}

/// One line of a trace file: `{"op":"ccz","q":[0,1,2]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEvent {
    #[serde(rename = "op")]
    pub kind: EventKind,
    #[serde(rename = "q")]
    pub qubits: Vec<u64>,
}

impl TraceEvent {
    pub fn new(kind: EventKind, qubits: impl Into<Vec<u64>>) -> Self {
        Self {
            kind,
            qubits: qubits.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LogicalCounts {
    #[serde(default, deserialize_with = "lenient_u64")]
    pub num_qubits: u64,
    #[serde(default, deserialize_with = "lenient_u64")]
    pub t_count: u64,
    #[serde(default, deserialize_with = "lenient_u64")]
    pub rotation_count: u64,
    #[serde(default, deserialize_with = "lenient_u64")]
    pub rotation_depth: u64,
    #[serde(default, deserialize_with = "lenient_u64")]
    pub ccz_count: u64,
    #[serde(default, deserialize_with = "lenient_u64")]
    pub ccix_count: u64,
    #[serde(default, deserialize_with = "lenient_u64")]
    pub measurement_count: u64,
}

impl LogicalCounts {
    pub fn validate(&self) -> Result<(), CountsError> {
        if self.rotation_depth > self.rotation_count {
            return Err(CountsError::InvalidCounts {
                field: "rotationDepth exceeds rotationCount",
            });
        }
        if (self.rotation_depth == 0) != (self.rotation_count == 0) {
            return Err(CountsError::InvalidCounts {
                field: "rotationDepth must be zero exactly when rotationCount is zero",
            });
        }
        Ok(())
    }
}

/// Validated pass-through for logical counts that were computed elsewhere.
pub fn counts_from_estimates(direct: LogicalCounts) -> Result<LogicalCounts, CountsError> {
    direct.validate()?;
    Ok(direct)
}

/// Streaming counter; feed events with [`TraceCounter::push`].
#[derive(Debug, Default)]
pub struct TraceCounter {
    counts: LogicalCounts,
    live: HashSet<u64>,
    // Last non-Clifford layer touching each wire; survives release/realloc.
    layer: HashMap<u64, u64>,
    rotation_layers: HashSet<u64>,
    index: usize,
}

impl TraceCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: &TraceEvent) -> Result<(), CountsError> {
        let event_index = self.index;
        self.index += 1;
        let qubits = &event.qubits;
        if !event.kind.arity_ok(qubits.len()) {
            return Err(CountsError::ArityMismatch { event_index });
        }

        match event.kind {
            EventKind::Alloc => {
                for &qubit in qubits {
                    if !self.live.insert(qubit) {
                        return Err(CountsError::DoubleAlloc { qubit, event_index });
                    }
                }
                self.counts.num_qubits = self.counts.num_qubits.max(self.live.len() as u64);
                return Ok(());
            }
            EventKind::Release => {
                for &qubit in qubits {
                    if !self.live.remove(&qubit) {
                        return Err(CountsError::UseAfterRelease { qubit, event_index });
                    }
                }
                return Ok(());
            }
            _ => {}
        }

        if let Some(&qubit) = qubits.iter().find(|q| !self.live.contains(q)) {
            return Err(CountsError::UseAfterRelease { qubit, event_index });
        }
        if qubits.len() > 1 && has_duplicates(qubits) {
            return Err(CountsError::ArityMismatch { event_index });
        }

        if event.kind.is_non_clifford() {
            let layer = 1 + qubits
                .iter()
                .map(|q| self.layer.get(q).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            for &q in qubits {
                self.layer.insert(q, layer);
            }
            if event.kind == EventKind::Rz {
                self.rotation_layers.insert(layer);
            }
        }

        let c = &mut self.counts;
        match event.kind {
            EventKind::T => c.t_count += 1,
            EventKind::Rz => c.rotation_count += 1,
            EventKind::Ccz => c.ccz_count += 1,
            EventKind::Ccix => c.ccix_count += 1,
            EventKind::Measure => c.measurement_count += 1,
            EventKind::Clifford | EventKind::Alloc | EventKind::Release => {}
        }
        Ok(())
    }

    pub fn finish(self) -> LogicalCounts {
        LogicalCounts {
            rotation_depth: self.rotation_layers.len() as u64,
            ..self.counts
        }
    }
}

fn has_duplicates(qubits: &[u64]) -> bool {
    qubits
        .iter()
        .enumerate()
        .any(|(i, q)| qubits[i + 1..].contains(q))
}

/// Counts a whole event stream.
///
/// The rotation depth is the number of distinct ASAP non-Clifford layers that
/// contain at least one `rz`. Clifford and measurement events are transparent
/// to layering.
pub fn count_trace<'a>(
    events: impl IntoIterator<Item = &'a TraceEvent>,
) -> Result<LogicalCounts, CountsError> {
    let mut counter = TraceCounter::new();
    for event in events {
        counter.push(event)?;
    }
    Ok(counter.finish())
}

/// Reads and counts a line-delimited JSON trace. Blank lines are skipped.
pub fn count_trace_reader(reader: impl BufRead) -> Result<LogicalCounts, CountsError> {
    let mut counter = TraceCounter::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CountsError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let event: TraceEvent =
            serde_json::from_str(&line).map_err(|e| CountsError::TraceFormat {
                line: i + 1,
                message: e.to_string(),
            })?;
        counter.push(&event)?;
    }
    Ok(counter.finish())
}
