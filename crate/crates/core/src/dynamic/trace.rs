use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::demand::Demand;
use crate::graph::{NetworkGraph, NodeId};

use super::{ProvisionError, ProvisionOutcome, ProvisionState};

#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Arrive { id: usize, source: NodeId, destination: NodeId, time: f64 },
    Depart { id: usize, time: f64 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::Arrive { time, .. } | Event::Depart { time, .. } => time,
        }
    }

    pub fn id(&self) -> usize {
        match *self {
            Event::Arrive { id, .. } | Event::Depart { id, .. } => id,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: event time goes backwards")]
    Unsorted { line: usize },
    #[error("line {line}: node {node} is not in the topology")]
    UnknownNode { line: usize, node: NodeId },
    #[error("line {line}: connection {id} arrives twice")]
    DuplicateArrival { line: usize, id: usize },
    #[error("line {line}: connection {id} departs without an arrival")]
    DepartWithoutArrival { line: usize, id: usize },
    #[error("event {event}: {source}")]
    Provision { event: usize, source: ProvisionError },
    #[error("event {event}: state audit failed: {msg}")]
    Audit { event: usize, msg: String },
}

/// Parse `arrive <id> <src> <dst> <time>` / `depart <id> <time>` lines.
pub fn parse_trace(text: &str, graph: Option<&NetworkGraph>) -> Result<Vec<Event>, TraceError> {
    let mut events = Vec::new();
    let mut arrived = BTreeSet::new();
    let mut last = f64::NEG_INFINITY;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: &str| TraceError::Parse { line, msg: msg.to_string() };
        let w: Vec<&str> = body.split_whitespace().collect();
        let num = |s: &str| s.parse::<usize>().map_err(|_| err(&format!("bad integer `{s}`")));
        let time = |s: &str| -> Result<f64, TraceError> {
            let t: f64 = s.parse().map_err(|_| err(&format!("bad time `{s}`")))?;
            if t.is_finite() && t >= 0.0 {
                Ok(t)
            } else {
                Err(err("time must be finite and nonnegative"))
            }
        };
        let ev = match w.as_slice() {
            ["arrive", id, s, d, t] => {
                let (id, source, destination) = (num(id)?, num(s)?, num(d)?);
                if source == destination {
                    return Err(err("source equals destination"));
                }
                if let Some(g) = graph {
                    for v in [source, destination] {
                        if !g.contains(v) {
                            return Err(TraceError::UnknownNode { line, node: v });
                        }
                    }
                }
                if !arrived.insert(id) {
                    return Err(TraceError::DuplicateArrival { line, id });
                }
                Event::Arrive { id, source, destination, time: time(t)? }
            }
            ["depart", id, t] => {
                let id = num(id)?;
                if !arrived.contains(&id) {
                    return Err(TraceError::DepartWithoutArrival { line, id });
                }
                Event::Depart { id, time: time(t)? }
            }
            _ => return Err(err("expected `arrive <id> <src> <dst> <time>` or `depart <id> <time>`")),
        };
        if ev.time() < last {
            return Err(TraceError::Unsorted { line });
        }
        last = ev.time();
        events.push(ev);
    }
    Ok(events)
}

pub fn write_trace(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        let _ = match *e {
            Event::Arrive { id, source, destination, time } => writeln!(out, "arrive {id} {source} {destination} {time}"),
            Event::Depart { id, time } => writeln!(out, "depart {id} {time}"),
        };
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventOutcome {
    Provisioned { group: usize, esc: f64, new_group: bool },
    Blocked,
    /// Links whose capacity was released.
    Departed { freed: usize },
    /// Departure of a connection that had been blocked.
    Ignored,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayLog {
    pub entries: Vec<(Event, EventOutcome)>,
    pub offered: usize,
    pub blocked: usize,
}

impl ReplayLog {
    /// Blocked over offered; zero when nothing was offered.
    pub fn blocking_probability(&self) -> f64 {
        if self.offered == 0 {
            0.0
        } else {
            self.blocked as f64 / self.offered as f64
        }
    }
}

/// Feed events through the state. The state is audited after every
/// `audit_every`-th event (0 disables auditing); `observe` sees the state
/// after each event.
pub fn replay(
    state: &mut ProvisionState,
    events: &[Event],
    audit_every: usize,
    mut observe: impl FnMut(usize, &ProvisionState, &Event, &EventOutcome),
) -> Result<ReplayLog, TraceError> {
    let mut log = ReplayLog::default();
    let mut blocked = BTreeSet::new();
    for (i, ev) in events.iter().enumerate() {
        let outcome = match *ev {
            Event::Arrive { id, source, destination, time } => {
                log.offered += 1;
                let demand = Demand { id, source, destination, arrival_time: Some(time), holding_time: None };
                match state.provision_demand(&demand).map_err(|e| TraceError::Provision { event: i, source: e })? {
                    ProvisionOutcome::Provisioned { group, esc, new_group, .. } => {
                        EventOutcome::Provisioned { group, esc, new_group }
                    }
                    ProvisionOutcome::Blocked { .. } => {
                        log.blocked += 1;
                        blocked.insert(id);
                        EventOutcome::Blocked
                    }
                }
            }
            Event::Depart { id, .. } => {
                if blocked.remove(&id) {
                    EventOutcome::Ignored
                } else {
                    let freed = state.teardown_connection(id).map_err(|e| TraceError::Provision { event: i, source: e })?;
                    EventOutcome::Departed { freed: freed.len() }
                }
            }
        };
        if audit_every > 0 && (i + 1) % audit_every == 0 {
            state.audit().map_err(|msg| TraceError::Audit { event: i, msg })?;
        }
        observe(i, state, ev, &outcome);
        log.entries.push((ev.clone(), outcome));
    }
    Ok(log)
}
