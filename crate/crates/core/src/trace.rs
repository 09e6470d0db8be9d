//! JSON-lines event log for solver runs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use crate::model::Assignment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockReason {
    /// A string variable could not be realized under the model.
    Nlsolve,
    /// A boolean-only constraint disagreed with the model.
    PostVerify,
    /// The model was accepted and is excluded to find the next one.
    Cover,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Propose {
        model: Assignment,
    },
    Block {
        reason: BlockReason,
        blocked: Assignment,
    },
    NlsolveRound {
        var: String,
        round: usize,
        candidate: String,
        failed: Vec<String>,
    },
    VerifyBatch {
        subject: Option<String>,
        ids: Vec<String>,
        mismatches: usize,
    },
    CacheHit {
        var: String,
        exact: bool,
    },
}

enum Sink {
    Memory(Vec<TraceEvent>),
    File(BufWriter<File>),
}

/// Thread-safe event sink. Each record carries milliseconds since the trace opened.
pub struct Trace {
    start: Instant,
    sink: Mutex<Sink>,
}

impl std::fmt::Debug for Trace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Trace")
    }
}

impl Trace {
    pub fn in_memory() -> Self {
        Trace {
            start: Instant::now(),
            sink: Mutex::new(Sink::Memory(Vec::new())),
        }
    }

    pub fn to_file(path: &Path) -> std::io::Result<Self> {
        Ok(Trace {
            start: Instant::now(),
            sink: Mutex::new(Sink::File(BufWriter::new(File::create(path)?))),
        })
    }

    pub fn record(&self, event: TraceEvent) {
        let mut sink = self.sink.lock().unwrap_or_else(|e| e.into_inner());
        match &mut *sink {
            Sink::Memory(events) => events.push(event),
            Sink::File(w) => {
                let mut line = serde_json::to_value(&event).unwrap_or_default();
                line["elapsed_ms"] = serde_json::json!(self.start.elapsed().as_secs_f64() * 1e3);
                if writeln!(w, "{line}").and_then(|_| w.flush()).is_err() {
                    log::warn!("failed to write trace record");
                }
            }
        }
    }

    /// Recorded events; empty for file-backed traces.
    pub fn events(&self) -> Vec<TraceEvent> {
        match &*self.sink.lock().unwrap_or_else(|e| e.into_inner()) {
            Sink::Memory(events) => events.clone(),
            Sink::File(_) => Vec::new(),
        }
    }
}

pub(crate) fn emit(trace: Option<&Trace>, event: impl FnOnce() -> TraceEvent) {
    if let Some(t) = trace {
        t.record(event());
    }
}
