use serde::{Deserialize, Serialize};

use crate::domain::{satisfaction, EventKind, ExecutionEvent, GoalConfiguration, WorldState};
use crate::goal_io::LayoutTemplate;

use super::{initial_world, ExecutionTrace, SimError, TraceHeader};

/// Header line, then one event per line, each newline-terminated.
pub fn trace_to_jsonl(trace: &ExecutionTrace) -> String {
    let mut out = serde_json::to_string(&trace.header).expect("header serializes");
    out.push('\n');
    for e in &trace.events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

pub fn read_trace(text: &str) -> Result<(TraceHeader, Vec<ExecutionEvent>), SimError> {
    let bad = |line: usize, e: serde_json::Error| SimError::MalformedTrace(format!("line {line}: {e}"));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| SimError::MalformedTrace("empty trace file".into()))?;
    let header: TraceHeader = serde_json::from_str(first).map_err(|e| bad(1, e))?;
    let events = lines.map(|(i, l)| serde_json::from_str(l).map_err(|e| bad(i + 1, e))).collect::<Result<_, _>>()?;
    Ok((header, events))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t_s: f64,
    pub pct: f64,
}

/// Completion percentage over time: a right-continuous step function that
/// starts at 0 s and holds its last value from `end_s` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionCurve {
    /// Breakpoints with strictly increasing times; the first is at 0 s.
    pub points: Vec<CurvePoint>,
    pub end_s: f64,
}

impl CompletionCurve {
    pub fn constant(pct: f64) -> Self {
        CompletionCurve { points: vec![CurvePoint { t_s: 0.0, pct }], end_s: 0.0 }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.points.partition_point(|p| p.t_s <= t);
        self.points[i.saturating_sub(1)].pct
    }

    pub fn final_pct(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.pct)
    }

    fn push(&mut self, t_s: f64, pct: f64) {
        match self.points.last_mut() {
            Some(last) if last.t_s == t_s => last.pct = pct,
            _ => self.points.push(CurvePoint { t_s, pct }),
        }
    }
}

/// Folds the events over the goal's initial world and returns the
/// completion curve, with one breakpoint per peg insertion.
pub fn replay(events: &[ExecutionEvent], goal: &GoalConfiguration) -> Result<CompletionCurve, SimError> {
    replay_world(events, goal).map(|(c, _)| c)
}

/// As [`replay`], also returning the final world state. Template slots of
/// that state are placeholders since traces do not record them.
pub fn replay_world(events: &[ExecutionEvent], goal: &GoalConfiguration) -> Result<(CompletionCurve, WorldState), SimError> {
    let malformed = |i: usize, m: String| SimError::MalformedTrace(format!("event {i}: {m}"));
    let mut world = initial_world(goal, &LayoutTemplate::default());
    let mut curve = CompletionCurve::constant(satisfaction(&world, goal).completion_pct);
    let mut last_t = 0.0_f64;
    for (i, e) in events.iter().enumerate() {
        if !(e.t_s.is_finite() && e.t_s >= 0.0) {
            return Err(malformed(i, format!("timestamp {} is not a nonnegative number", e.t_s)));
        }
        if e.t_s < last_t {
            return Err(malformed(i, format!("timestamp {} precedes {last_t}", e.t_s)));
        }
        last_t = e.t_s;
        if e.kind == EventKind::RunEnded && i + 1 != events.len() {
            return Err(malformed(i, "run_ended before the last event".into()));
        }
        if let Some(c) = e.connections.iter().find(|c| !goal.connections.contains(*c)) {
            return Err(malformed(i, format!("connection {c} is not part of goal {}", goal.goal_id)));
        }
        world = world.apply_event(e).map_err(|err| malformed(i, err.to_string()))?;
        if e.kind == EventKind::PegInserted {
            curve.push(e.t_s, satisfaction(&world, goal).completion_pct);
        }
    }
    curve.end_s = last_t;
    Ok((curve, world))
}
