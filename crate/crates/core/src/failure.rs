//! Single-span failure simulation and the restoration-time model.
//!
//! Every design is reduced to the rows its destinations receive: a GF(2)
//! combination of connection signals plus the spans the row depends on. A
//! span cut erases every row that depends on it; a connection survives iff
//! its unit vector is still in the span of the remaining rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Duration;

use thiserror::Error;

use crate::dynamic::ProvisionState;
use crate::gf2::{express, BitRow};
use crate::graph::{NetworkGraph, NodeId, SpanId};
use crate::routing::{nodes_reaching, upstream_of};
use crate::tree::{extract_paths, TreeSolution};

/// Timing inputs of the restoration-time model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RestorationParams {
    /// Failure detection time `F`.
    pub detection: Duration,
    /// Node processing time `D`.
    pub processing: Duration,
    /// Cross-connect configuration time `X`. Only reported; it never enters
    /// the coding restoration time.
    pub configuration: Duration,
}

impl Default for RestorationParams {
    fn default() -> Self {
        RestorationParams {
            detection: Duration::from_micros(10),
            processing: Duration::from_micros(300),
            configuration: Duration::from_millis(1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Static,
    Dynamic,
}

/// `F + D` for static designs; dynamic designs pay twice that for the extra
/// feed-forward error signalling.
pub fn restoration_time(p: &RestorationParams, mode: Mode) -> Duration {
    let base = p.detection + p.processing;
    match mode {
        Mode::Static => base,
        Mode::Dynamic => base * 2,
    }
}

/// One received route at a destination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceivedRow {
    pub label: String,
    /// Connection ids XORed on this row.
    pub combination: BTreeSet<usize>,
    /// Spans whose failure erases the row.
    pub spans: BTreeSet<SpanId>,
}

/// Rows of one decoder (a static tree or a dynamic coding group).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoder {
    pub destination: NodeId,
    pub connections: Vec<usize>,
    pub rows: Vec<ReceivedRow>,
}

#[derive(Clone, Copy, Debug)]
pub enum Design<'a> {
    Static(&'a TreeSolution),
    Dynamic(&'a ProvisionState),
}

impl Design<'_> {
    pub fn mode(&self) -> Mode {
        match self {
            Design::Static(_) => Mode::Static,
            Design::Dynamic(_) => Mode::Dynamic,
        }
    }
}

/// Reduce a design to its decoders.
pub fn decoders(g: &NetworkGraph, design: Design<'_>) -> Vec<Decoder> {
    let spans_of = |links: &mut dyn Iterator<Item = crate::graph::LinkId>| -> BTreeSet<SpanId> {
        links.map(|l| g.span_of(l)).collect()
    };
    match design {
        Design::Static(sol) => sol
            .trees
            .iter()
            .enumerate()
            .map(|(ti, tree)| {
                let mut rows = Vec::new();
                // without a consistent primary split no primary row is received
                if let Ok(x) = extract_paths(g, tree, ti) {
                    for (&id, path) in &x.primary {
                        rows.push(ReceivedRow {
                            label: format!("primary {id}"),
                            combination: BTreeSet::from([id]),
                            spans: spans_of(&mut path.iter().copied()),
                        });
                    }
                }
                for &l in g.incoming(tree.destination) {
                    if !tree.protection_links.contains(&l) {
                        continue;
                    }
                    let feeders = nodes_reaching(g, &tree.protection_links, g.link(l).tail);
                    let combination =
                        tree.demands.iter().filter(|d| feeders.contains(&d.source)).map(|d| d.id).collect();
                    let upstream = upstream_of(g, &tree.protection_links, l);
                    let link = g.link(l);
                    rows.push(ReceivedRow {
                        label: format!("protection {}>{}", link.tail, link.head),
                        combination,
                        spans: spans_of(&mut upstream.into_iter()),
                    });
                }
                Decoder { destination: tree.destination, connections: tree.demands.iter().map(|d| d.id).collect(), rows }
            })
            .collect(),
        Design::Dynamic(state) => state
            .groups()
            .iter()
            .map(|grp| Decoder {
                destination: grp.destination,
                connections: grp.signals.clone(),
                rows: grp
                    .rows
                    .iter()
                    .map(|r| ReceivedRow {
                        label: format!("group {} row {}", grp.id, r.id),
                        combination: r.combination.clone(),
                        spans: spans_of(&mut r.links.keys().copied()),
                    })
                    .collect(),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// The rows normally used for this connection are intact.
    Delivered,
    /// Decodable from the surviving rows; `recipe` names the rows to XOR.
    Recovered { recipe: Vec<String> },
    Lost,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionOutcome {
    pub connection: usize,
    pub destination: NodeId,
    pub outcome: Outcome,
    /// Set for recovered connections.
    pub restoration: Option<Duration>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailureReport {
    pub span: SpanId,
    /// Sorted by connection id.
    pub outcomes: Vec<ConnectionOutcome>,
}

impl FailureReport {
    pub fn lost(&self) -> impl Iterator<Item = &ConnectionOutcome> {
        self.outcomes.iter().filter(|o| o.outcome == Outcome::Lost)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FailureError {
    #[error("unknown span {0}")]
    UnknownSpan(SpanId),
}

fn bits(row: &ReceivedRow, cols: &BTreeMap<usize, usize>) -> BitRow {
    let mut b = BitRow::zeros(cols.len());
    for c in &row.combination {
        if let Some(&i) = cols.get(c) {
            b.set(i, true);
        }
    }
    b
}

/// Decode every connection of `dec` after erasing the rows that depend on
/// `span` (or nothing, for `None`).
pub fn decode(dec: &Decoder, span: Option<SpanId>, rt: Duration) -> Vec<ConnectionOutcome> {
    let cols: BTreeMap<usize, usize> = dec.connections.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let all: Vec<BitRow> = dec.rows.iter().map(|r| bits(r, &cols)).collect();
    let alive: Vec<usize> = (0..dec.rows.len()).filter(|&i| span.is_none_or(|s| !dec.rows[i].spans.contains(&s))).collect();
    let survivors: Vec<BitRow> = alive.iter().map(|&i| all[i].clone()).collect();
    dec.connections
        .iter()
        .enumerate()
        .map(|(col, &c)| {
            let unit = BitRow::unit(cols.len(), col);
            let baseline: Option<Vec<usize>> = match all.iter().position(|r| *r == unit) {
                Some(i) => Some(vec![i]),
                None => express(&all, &unit),
            };
            let outcome = match baseline {
                Some(b) if b.iter().all(|i| alive.contains(i)) => Outcome::Delivered,
                _ => match express(&survivors, &unit) {
                    Some(recipe) => Outcome::Recovered {
                        recipe: recipe.into_iter().map(|k| dec.rows[alive[k]].label.clone()).collect(),
                    },
                    None => Outcome::Lost,
                },
            };
            let restoration = matches!(outcome, Outcome::Recovered { .. }).then_some(rt);
            ConnectionOutcome { connection: c, destination: dec.destination, outcome, restoration }
        })
        .collect()
}

/// Cut both directions of `span` and classify every connection.
pub fn simulate_span_failure(
    g: &NetworkGraph,
    design: Design<'_>,
    span: SpanId,
    params: &RestorationParams,
) -> Result<FailureReport, FailureError> {
    if span.0 >= g.spans().len() {
        return Err(FailureError::UnknownSpan(span));
    }
    let rt = restoration_time(params, design.mode());
    let mut outcomes: Vec<ConnectionOutcome> =
        decoders(g, design).iter().flat_map(|d| decode(d, Some(span), rt)).collect();
    outcomes.sort_by_key(|o| o.connection);
    Ok(FailureReport { span, outcomes })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub reports: Vec<FailureReport>,
    /// Span with the most lost connections (lowest id on ties).
    pub worst: Option<(SpanId, usize)>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.worst.is_none()
    }

    pub fn lost(&self) -> usize {
        self.reports.iter().map(|r| r.lost().count()).sum()
    }
}

/// Fail every span in turn.
pub fn verify_design(g: &NetworkGraph, design: Design<'_>, params: &RestorationParams) -> Verification {
    let rt = restoration_time(params, design.mode());
    let decs = decoders(g, design);
    let mut reports = Vec::with_capacity(g.spans().len());
    let mut worst: Option<(SpanId, usize)> = None;
    for span in g.spans() {
        let mut outcomes: Vec<ConnectionOutcome> = decs.iter().flat_map(|d| decode(d, Some(span.id), rt)).collect();
        outcomes.sort_by_key(|o| o.connection);
        let report = FailureReport { span: span.id, outcomes };
        let lost = report.lost().count();
        if lost > 0 && worst.is_none_or(|(_, w)| lost > w) {
            worst = Some((span.id, lost));
        }
        reports.push(report);
    }
    Verification { reports, worst }
}

/// `span,connection,outcome,rt_us` with one line per span and connection.
pub fn report_csv(g: &NetworkGraph, reports: &[FailureReport]) -> String {
    let mut out = String::from("span,connection,outcome,rt_us\n");
    for r in reports {
        let s = g.span(r.span);
        for o in &r.outcomes {
            let outcome = match o.outcome {
                Outcome::Delivered => "delivered",
                Outcome::Recovered { .. } => "recovered",
                Outcome::Lost => "lost",
            };
            let rt = o.restoration.map(|d| d.as_micros().to_string()).unwrap_or_default();
            let _ = writeln!(out, "{}-{},{},{outcome},{rt}", s.a, s.b, o.connection);
        }
    }
    out
}
