//! Unit-bandwidth connection demands and the `demand <src> <dst>` file format.

use thiserror::Error;

use crate::graph::{NetworkGraph, NodeId};

#[derive(Clone, Debug, PartialEq)]
pub struct Demand {
    pub id: usize,
    pub source: NodeId,
    pub destination: NodeId,
    /// Dynamic mode only.
    pub arrival_time: Option<f64>,
    pub holding_time: Option<f64>,
}

impl Demand {
    pub fn new(id: usize, source: NodeId, destination: NodeId) -> Self {
        Demand { id, source, destination, arrival_time: None, holding_time: None }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DemandError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: source equals destination ({node})")]
    SelfDemand { line: usize, node: NodeId },
    #[error("line {line}: node {node} is not in the topology")]
    UnknownNode { line: usize, node: NodeId },
}

/// Parse a demand file. Ids are assigned in file order starting at 0. When a
/// graph is given, endpoints are checked against it.
pub fn parse_demands(text: &str, graph: Option<&NetworkGraph>) -> Result<Vec<Demand>, DemandError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "demand" {
            return Err(DemandError::Parse { line, msg: "expected `demand <src> <dst>`".into() });
        }
        let parse = |s: &str| {
            s.parse::<NodeId>()
                .map_err(|_| DemandError::Parse { line, msg: format!("invalid node id `{s}`") })
        };
        let (src, dst) = (parse(fields[1])?, parse(fields[2])?);
        if src == dst {
            return Err(DemandError::SelfDemand { line, node: src });
        }
        if let Some(g) = graph {
            for node in [src, dst] {
                if !g.contains(node) {
                    return Err(DemandError::UnknownNode { line, node });
                }
            }
        }
        out.push(Demand::new(out.len(), src, dst));
    }
    Ok(out)
}

pub fn write_demands(demands: &[Demand]) -> String {
    demands
        .iter()
        .map(|d| format!("demand {} {}\n", d.source, d.destination))
        .collect()
}
