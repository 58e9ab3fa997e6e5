//! Trace files: one JSON object per line. The first line is a header naming
//! the simulator configuration, then one line per step, then a summary line
//! with the return (and its exact bit pattern) and the event flag.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::SimSpec;
use crate::dast::CombinedSimulator;
use crate::error::{config_err, Error, Result};
use crate::reward::RewardParams;
use crate::seed::{Seed, SeedSequence};
use crate::sim::{replay, SeedActionSimulator, TrajectoryRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub simulation: SimSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<SimSpec>,
    pub reward: RewardParams,
    pub solver: String,
    pub search: usize,
    /// 0 for the best path of the search.
    pub rank: usize,
    pub rng_seed: u64,
    pub init_seed: u64,
}

impl TraceHeader {
    /// Builds the simulator the trace was recorded on.
    pub fn build(&self) -> Result<Box<dyn SeedActionSimulator>> {
        let test = self.simulation.build(self.init_seed)?;
        Ok(match &self.baseline {
            None => test,
            Some(b) => Box::new(CombinedSimulator::new(test, b.build(self.init_seed)?)),
        })
    }
}

/// A parsed trace file.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    /// Step lines exactly as stored.
    pub step_lines: Vec<String>,
    pub summary_line: String,
    pub seeds: SeedSequence,
    pub return_bits: u64,
    pub event_reached: bool,
}

pub(crate) fn trace_lines(header: &TraceHeader, record: &TrajectoryRecord) -> Result<Vec<String>> {
    let mut lines = vec![serde_json::to_string(header)?];
    for v in record.to_json_lines() {
        lines.push(serde_json::to_string(&v)?);
    }
    Ok(lines)
}

pub(crate) fn write_trace(path: &Path, header: &TraceHeader, record: &TrajectoryRecord) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for line in trace_lines(header, record)? {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Trace(msg.into())
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path)?;
    let mut lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() < 2 {
        return Err(malformed("a trace needs a header and a summary line"));
    }
    let header_value: Value = serde_json::from_str(lines[0])?;
    for key in ["simulation", "baseline"] {
        if let Some(kind) = header_value.get(key).and_then(|s| s.get("kind")) {
            let known = matches!(kind.as_str(), Some("walker") | Some("encounter"));
            if !known {
                return Err(config_err(format!("unknown simulator {kind} in trace header")));
            }
        }
    }
    let header: TraceHeader = serde_json::from_value(header_value)
        .map_err(|e| malformed(format!("bad header: {e}")))?;

    let summary_line = lines.pop().unwrap_or_default().to_string();
    let summary: Value = serde_json::from_str(&summary_line)?;
    let return_bits = summary
        .get("return_bits")
        .and_then(Value::as_str)
        .and_then(|s| u64::from_str_radix(s, 16).ok())
        .ok_or_else(|| malformed("summary line lacks return_bits"))?;
    let event_reached = summary
        .get("event_reached")
        .and_then(Value::as_bool)
        .ok_or_else(|| malformed("summary line lacks event_reached"))?;

    let mut seeds = SeedSequence::new();
    let mut step_lines = Vec::with_capacity(lines.len() - 1);
    for (n, line) in lines[1..].iter().enumerate() {
        let v: Value = serde_json::from_str(line)?;
        let seed = v
            .get("seed")
            .and_then(Value::as_u64)
            .ok_or_else(|| malformed(format!("step line {n} lacks a seed")))?;
        seeds.push(Seed(seed));
        step_lines.push(line.to_string());
    }
    Ok(Trace {
        header,
        step_lines,
        summary_line,
        seeds,
        return_bits,
        event_reached,
    })
}

/// A trace that replayed to identical output.
#[derive(Clone, Debug)]
pub struct ReplayReport {
    pub header: TraceHeader,
    pub record: TrajectoryRecord,
}

/// Re-runs a trace file's seeds and checks that every step line, the return
/// (bit for bit) and the event flag come out the same.
pub fn replay_trace(path: &Path) -> Result<ReplayReport> {
    let trace = read_trace(path)?;
    trace.header.simulation.validate()?;
    if let Some(b) = &trace.header.baseline {
        b.validate()?;
    }
    trace.header.reward.validate().map_err(config_err)?;
    let mut sim = trace.header.build()?;
    let record = replay(&mut sim, &trace.seeds, &trace.header.reward)?;

    let fresh = trace_lines(&trace.header, &record)?;
    let fresh_steps = &fresh[1..fresh.len() - 1];
    if record.return_value.to_bits() != trace.return_bits {
        return Err(Error::ReplayMismatch(format!(
            "return {} recomputed, {} recorded",
            record.return_value,
            f64::from_bits(trace.return_bits)
        )));
    }
    if record.event_reached != trace.event_reached {
        return Err(Error::ReplayMismatch(format!(
            "event flag {} recomputed, {} recorded",
            record.event_reached, trace.event_reached
        )));
    }
    if fresh_steps.len() != trace.step_lines.len() {
        return Err(Error::ReplayMismatch(format!(
            "{} steps recomputed, {} recorded",
            fresh_steps.len(),
            trace.step_lines.len()
        )));
    }
    if let Some(t) = (0..fresh_steps.len()).find(|&t| fresh_steps[t] != trace.step_lines[t]) {
        return Err(Error::ReplayMismatch(format!("step {t} differs")));
    }
    if fresh[fresh.len() - 1] != trace.summary_line {
        return Err(Error::ReplayMismatch("summary line differs".into()));
    }
    Ok(ReplayReport {
        header: trace.header,
        record,
    })
}
