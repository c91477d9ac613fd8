//! One-by-one provisioning with coding groups.
//!
//! Each arriving connection sends two copies toward its destination. Within a
//! coding group every destination-arriving route is a *row* carrying the XOR
//! of a set of signals. A newcomer either starts a fresh group (two rows that
//! both carry only its signal) or joins an existing group: one copy becomes a
//! new row disjoint from everything in the group, the other is coded into
//! exactly one existing row and rides it to the destination for free. Every
//! signal therefore appears in exactly two rows, which keeps the received
//! matrix decodable after the loss of any single row.

mod ilp;
mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::demand::Demand;
use crate::gf2::{has_full_column_rank, BitRow};
use crate::graph::{Capacity, LinkId, NetworkGraph, NodeId};
use crate::ip::SolveError;

pub use ilp::{build_cost_vectors, solve_disjoint_pair, CostVectors, DisjointPair};
pub use trace::{parse_trace, replay, write_trace, Event, EventOutcome, ReplayLog, TraceError};

#[derive(Debug, Error, PartialEq)]
pub enum ProvisionError {
    #[error("connection {0} is already active")]
    DuplicateConnection(usize),
    #[error("unknown connection {0}")]
    UnknownConnection(usize),
    #[error("group {group} does not terminate at node {destination}")]
    DestinationMismatch { group: usize, destination: NodeId },
    #[error("demand endpoint {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Solver(#[from] SolveError),
}

/// `true` iff deleting any single row of `rows` leaves full column rank.
pub fn full_rank_plus_one(rows: &[BitRow], columns: usize) -> bool {
    (0..rows.len()).all(|skip| {
        let rest: Vec<BitRow> = rows.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, r)| r.clone()).collect();
        has_full_column_rank(&rest, columns)
    })
}

/// A route arriving at the group destination. Links map to the set of
/// signals they carry; the arrival link carries the full combination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub id: usize,
    pub combination: BTreeSet<usize>,
    pub links: BTreeMap<LinkId, BTreeSet<usize>>,
}

impl Row {
    /// The row link leaving the head of `l`, if any.
    pub fn next_link(&self, g: &NetworkGraph, l: LinkId) -> Option<LinkId> {
        let head = g.link(l).head;
        g.outgoing(head).iter().copied().find(|o| self.links.contains_key(o))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodingGroup {
    /// Creation index; also the tie-break order.
    pub id: usize,
    pub destination: NodeId,
    /// Column order of the received matrix.
    pub signals: Vec<usize>,
    pub rows: Vec<Row>,
    next_row: usize,
}

impl CodingGroup {
    /// Received matrix over GF(2): one row per route, one column per signal.
    pub fn matrix(&self) -> Vec<BitRow> {
        self.rows
            .iter()
            .map(|r| {
                let mut b = BitRow::zeros(self.signals.len());
                for (c, s) in self.signals.iter().enumerate() {
                    if r.combination.contains(s) {
                        b.set(c, true);
                    }
                }
                b
            })
            .collect()
    }

    /// Every link the group owns, with the index of its row.
    pub fn owned_links(&self) -> BTreeMap<LinkId, usize> {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.links.keys().map(move |&l| (l, i))).collect()
    }

    pub fn full_rank_plus_one(&self) -> bool {
        full_rank_plus_one(&self.matrix(), self.signals.len())
    }

    fn push_row(&mut self, combination: BTreeSet<usize>, links: BTreeMap<LinkId, BTreeSet<usize>>) -> usize {
        let id = self.next_row;
        self.next_row += 1;
        self.rows.push(Row { id, combination, links });
        id
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pub demand: Demand,
    pub group: usize,
    pub primary: Vec<LinkId>,
    pub secondary: Vec<LinkId>,
    /// Row created for the disjoint copy.
    pub primary_row: usize,
    /// Row carrying the coded copy.
    pub coded_row: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProvisionOutcome {
    Provisioned {
        connection: usize,
        group: usize,
        new_group: bool,
        esc: f64,
        primary: Vec<LinkId>,
        secondary: Vec<LinkId>,
        /// Every option that was evaluated, in evaluation order.
        candidates: Vec<Candidate>,
    },
    Blocked { connection: usize, candidates: Vec<Candidate> },
}

/// One evaluated placement option.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    /// `None` for the fresh-group option.
    pub group: Option<usize>,
    pub esc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProvisionState {
    graph: NetworkGraph,
    initial: Vec<Capacity>,
    free: Vec<Capacity>,
    groups: Vec<CodingGroup>,
    next_group: usize,
    connections: BTreeMap<usize, Connection>,
}

impl ProvisionState {
    /// Empty state; link capacities come from the graph.
    pub fn new(graph: NetworkGraph) -> Self {
        let initial: Vec<Capacity> = graph.links().iter().map(|l| graph.capacity(l.id)).collect();
        ProvisionState {
            graph,
            free: initial.clone(),
            initial,
            groups: Vec::new(),
            next_group: 0,
            connections: BTreeMap::new(),
        }
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn groups(&self) -> &[CodingGroup] {
        &self.groups
    }

    pub fn group(&self, id: usize) -> Option<&CodingGroup> {
        self.groups.iter().find(|g| g.id == id)
    }

    pub fn connections(&self) -> &BTreeMap<usize, Connection> {
        &self.connections
    }

    pub fn free_capacity(&self, l: LinkId) -> Capacity {
        self.free[l.0]
    }

    pub fn has_free_capacity(&self, l: LinkId) -> bool {
        !matches!(self.free[l.0], Capacity::Limited(0))
    }

    /// Units bought so far on limited links.
    pub fn used_units(&self) -> u64 {
        self.initial
            .iter()
            .zip(&self.free)
            .map(|(a, b)| match (a, b) {
                (Capacity::Limited(a), Capacity::Limited(b)) => u64::from(a - b),
                _ => 0,
            })
            .sum()
    }

    /// Total cost of every link owned by some group.
    pub fn owned_cost(&self) -> f64 {
        self.groups
            .iter()
            .flat_map(|g| g.rows.iter().flat_map(|r| r.links.keys()))
            .map(|&l| self.graph.link(l).cost())
            .sum()
    }

    /// Admit `demand` into the group where it costs the least extra spare
    /// capacity, or report it blocked and leave the state untouched.
    pub fn provision_demand(&mut self, demand: &Demand) -> Result<ProvisionOutcome, ProvisionError> {
        if self.connections.contains_key(&demand.id) {
            return Err(ProvisionError::DuplicateConnection(demand.id));
        }
        for v in [demand.source, demand.destination] {
            if !self.graph.contains(v) {
                return Err(ProvisionError::UnknownNode(v));
            }
        }
        let mut candidates = Vec::new();
        let mut best: Option<(f64, Option<usize>, DisjointPair)> = None;
        let options: Vec<Option<usize>> = self
            .groups
            .iter()
            .enumerate()
            .filter(|(_, grp)| grp.destination == demand.destination)
            .map(|(i, _)| Some(i))
            .chain([None])
            .collect();
        for opt in options {
            let grp = opt.map(|i| &self.groups[i]);
            let cv = build_cost_vectors(self, grp, demand)?;
            let pair = solve_disjoint_pair(&self.graph, demand, &cv, grp)?;
            candidates.push(Candidate { group: grp.map(|g| g.id), esc: pair.as_ref().map(|p| p.cost) });
            if let Some(p) = pair {
                // strict improvement only: earlier groups win ties and the
                // fresh group comes last
                if best.as_ref().is_none_or(|(c, _, _)| p.cost < *c - 1e-9) {
                    best = Some((p.cost, opt, p));
                }
            }
        }
        let Some((esc, opt, pair)) = best else {
            return Ok(ProvisionOutcome::Blocked { connection: demand.id, candidates });
        };

        let k = demand.id;
        let group_index = match opt {
            Some(i) => i,
            None => {
                self.groups.push(CodingGroup {
                    id: self.next_group,
                    destination: demand.destination,
                    signals: Vec::new(),
                    rows: Vec::new(),
                    next_row: 0,
                });
                self.next_group += 1;
                self.groups.len() - 1
            }
        };
        let owned = self.groups[group_index].owned_links();
        let only_k = BTreeSet::from([k]);
        let mut bought: Vec<LinkId> = pair.primary.clone();
        let grp = &mut self.groups[group_index];
        grp.signals.push(k);
        let primary_row = grp.push_row(only_k.clone(), pair.primary.iter().map(|&l| (l, only_k.clone())).collect());
        let coded_row = match pair.secondary.iter().position(|l| owned.contains_key(l)) {
            None => {
                bought.extend(pair.secondary.iter().copied());
                grp.push_row(only_k.clone(), pair.secondary.iter().map(|&l| (l, only_k.clone())).collect())
            }
            Some(join) => {
                let row = &mut grp.rows[owned[&pair.secondary[join]]];
                for &l in &pair.secondary[..join] {
                    row.links.insert(l, only_k.clone());
                    bought.push(l);
                }
                for &l in &pair.secondary[join..] {
                    row.links.get_mut(&l).expect("coded copy follows its row").insert(k);
                }
                row.combination.insert(k);
                row.id
            }
        };
        let group_id = grp.id;
        for l in bought {
            if let Capacity::Limited(u) = &mut self.free[l.0] {
                *u -= 1;
            }
        }
        self.connections.insert(
            k,
            Connection {
                demand: demand.clone(),
                group: group_id,
                primary: pair.primary.clone(),
                secondary: pair.secondary.clone(),
                primary_row,
                coded_row,
            },
        );
        Ok(ProvisionOutcome::Provisioned {
            connection: k,
            group: group_id,
            new_group: opt.is_none(),
            esc,
            primary: pair.primary,
            secondary: pair.secondary,
            candidates,
        })
    }

    /// Remove a connection: drop links that carry only its signal, strip it
    /// from coded links, delete its column and any rows left empty, and
    /// return one capacity unit on every dropped link.
    ///
    /// Returns the links whose capacity was released.
    pub fn teardown_connection(&mut self, id: usize) -> Result<Vec<LinkId>, ProvisionError> {
        let conn = self.connections.remove(&id).ok_or(ProvisionError::UnknownConnection(id))?;
        let gi = self.groups.iter().position(|g| g.id == conn.group).expect("connection group exists");
        let grp = &mut self.groups[gi];
        let mut freed = Vec::new();
        for row in &mut grp.rows {
            row.combination.remove(&id);
            row.links.retain(|&l, combo| {
                combo.remove(&id);
                if combo.is_empty() {
                    freed.push(l);
                    false
                } else {
                    true
                }
            });
        }
        grp.rows.retain(|r| !r.combination.is_empty());
        grp.signals.retain(|&s| s != id);
        if grp.signals.is_empty() {
            self.groups.remove(gi);
        }
        freed.sort();
        for &l in &freed {
            if let (Capacity::Limited(u), Capacity::Limited(max)) = (&mut self.free[l.0], self.initial[l.0]) {
                *u = (*u + 1).min(max);
            }
        }
        Ok(freed)
    }

    /// Check every state invariant; returns a description of the first
    /// violation.
    pub fn audit(&self) -> Result<(), String> {
        let g = &self.graph;
        let mut members = BTreeSet::new();
        for grp in &self.groups {
            if !grp.full_rank_plus_one() {
                return Err(format!("group {} lost full rank + 1", grp.id));
            }
            for &s in &grp.signals {
                let rows = grp.rows.iter().filter(|r| r.combination.contains(&s)).count();
                if rows < 2 {
                    return Err(format!("signal {s} reaches group {} on {rows} row(s)", grp.id));
                }
                if !members.insert(s) {
                    return Err(format!("signal {s} belongs to two groups"));
                }
                match self.connections.get(&s) {
                    Some(c) if c.group == grp.id => {}
                    _ => return Err(format!("signal {s} of group {} is not an active member", grp.id)),
                }
            }
            let mut spans = BTreeMap::new();
            for row in &grp.rows {
                for &l in row.links.keys() {
                    if let Some(other) = spans.insert(g.span_of(l), row.id) {
                        if other != row.id || row.links.contains_key(&g.reverse(l)) {
                            return Err(format!("group {} reuses span {} across rows", grp.id, g.span_of(l)));
                        }
                    }
                }
                let arrivals = row.links.keys().filter(|&&l| g.link(l).head == grp.destination).count();
                if arrivals != 1 {
                    return Err(format!("row {} of group {} has {arrivals} arrival links", row.id, grp.id));
                }
                for &l in row.links.keys() {
                    let outs = g.outgoing(g.link(l).tail).iter().filter(|o| row.links.contains_key(o)).count();
                    if outs != 1 {
                        return Err(format!("row {} of group {} diverges at node {}", row.id, grp.id, g.link(l).tail));
                    }
                    if let Some(n) = row.next_link(g, l) {
                        if !row.links[&l].is_subset(&row.links[&n]) {
                            return Err(format!("row {} of group {} drops a signal after {l}", row.id, grp.id));
                        }
                    }
                }
            }
        }
        if members.len() != self.connections.len() {
            return Err("active connection without a group".into());
        }
        Ok(())
    }

    /// Stable text dump of groups, matrices and limited capacities.
    pub fn snapshot(&self) -> String {
        let g = &self.graph;
        let ls = |l: LinkId| format!("{}>{}", g.link(l).tail, g.link(l).head);
        let set = |s: &BTreeSet<usize>| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        for grp in &self.groups {
            let sig: Vec<String> = grp.signals.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "group {} destination {} signals {}", grp.id, grp.destination, sig.join(" "));
            for (row, bits) in grp.rows.iter().zip(grp.matrix()) {
                let m: String = bits.to_bits().iter().map(|b| b.to_string()).collect();
                let links: Vec<String> = row.links.iter().map(|(&l, c)| format!("{}:{}", ls(l), set(c))).collect();
                let _ = writeln!(out, "row {} [{m}] {}", row.id, links.join(" "));
            }
        }
        for link in g.links() {
            if let (Capacity::Limited(f), Capacity::Limited(c)) = (self.free[link.id.0], self.initial[link.id.0]) {
                if f != c {
                    let _ = writeln!(out, "capacity {} {f}/{c}", ls(link.id));
                }
            }
        }
        out
    }
}
