//! Network graph model: nodes, undirected spans and the two directed links
//! each span expands into.
//!
//! Topology files are line oriented:
//!
//! ```text
//! # comment
//! nodes 4
//! span 0 1 100
//! span 1 2 100 8     # optional capacity in units, omitted = unlimited
//! ```
//!
//! Span `k` always yields links `2k` (`a -> b`) and `2k + 1` (`b -> a`), so link
//! ids are stable across a save/load round trip.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

pub type NodeId = usize;

/// Propagation speed used to derive link delays from lengths (length units per
/// time unit). 200 km per ms is the usual figure for light in fiber.
pub const DEFAULT_SIGNAL_SPEED: i64 = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpanId(pub usize);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

impl fmt::Display for SpanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Capacity {
    Limited(u32),
    Unlimited,
}

impl Capacity {
    pub fn units(self) -> Option<u32> {
        match self {
            Capacity::Limited(u) => Some(u),
            Capacity::Unlimited => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Span {
    pub id: SpanId,
    pub a: NodeId,
    pub b: NodeId,
    pub length: Rational64,
    pub capacity: Capacity,
    /// `[a -> b, b -> a]`
    pub links: [LinkId; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedLink {
    pub id: LinkId,
    pub tail: NodeId,
    pub head: NodeId,
    pub span: SpanId,
    pub length: Rational64,
    pub delay: Rational64,
}

impl DirectedLink {
    pub fn cost(&self) -> f64 {
        self.length.to_f64().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: duplicate span between {a} and {b}")]
    DuplicateSpan { line: usize, a: NodeId, b: NodeId },
    #[error("line {line}: span cost must be positive")]
    NonPositiveCost { line: usize },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: NodeId },
    #[error("line {line}: node {node} is out of range")]
    UnknownNode { line: usize, node: NodeId },
    #[error("graph is disconnected: node {0} is unreachable from node 0")]
    Disconnected(NodeId),
    #[error("missing `nodes <count>` header")]
    MissingHeader,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown link {0}")]
    UnknownLink(LinkId),
}

/// Immutable network graph. Build with [`GraphBuilder`] or [`load_topology`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkGraph {
    node_count: usize,
    spans: Vec<Span>,
    links: Vec<DirectedLink>,
    incoming: Vec<Vec<LinkId>>,
    outgoing: Vec<Vec<LinkId>>,
    by_endpoints: BTreeMap<(NodeId, NodeId), LinkId>,
}

impl NetworkGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.node_count
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn links(&self) -> &[DirectedLink] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &DirectedLink {
        &self.links[id.0]
    }

    pub fn span(&self, id: SpanId) -> &Span {
        &self.spans[id.0]
    }

    pub fn span_of(&self, id: LinkId) -> SpanId {
        self.links[id.0].span
    }

    /// The opposite-direction link on the same span.
    pub fn reverse(&self, id: LinkId) -> LinkId {
        LinkId(id.0 ^ 1)
    }

    pub fn link_between(&self, tail: NodeId, head: NodeId) -> Option<LinkId> {
        self.by_endpoints.get(&(tail, head)).copied()
    }

    pub fn capacity(&self, id: LinkId) -> Capacity {
        self.spans[self.span_of(id).0].capacity
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v < self.node_count
    }

    /// Incoming or outgoing links of `v`, in ascending id order.
    pub fn incident_links(&self, v: NodeId, direction: Direction) -> Result<&[LinkId], GraphError> {
        if !self.contains(v) {
            return Err(GraphError::UnknownNode(v));
        }
        Ok(match direction {
            Direction::In => &self.incoming[v],
            Direction::Out => &self.outgoing[v],
        })
    }

    pub fn incoming(&self, v: NodeId) -> &[LinkId] {
        &self.incoming[v]
    }

    pub fn outgoing(&self, v: NodeId) -> &[LinkId] {
        &self.outgoing[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.outgoing[v].len()
    }

    /// Spans traversed (in either direction) by both walks.
    pub fn spans_shared(&self, path_a: &[LinkId], path_b: &[LinkId]) -> BTreeSet<SpanId> {
        let a: BTreeSet<SpanId> = path_a.iter().map(|&l| self.span_of(l)).collect();
        path_b
            .iter()
            .map(|&l| self.span_of(l))
            .filter(|s| a.contains(s))
            .collect()
    }

    pub fn path_length(&self, path: &[LinkId]) -> Rational64 {
        path.iter().map(|&l| self.links[l.0].length).sum()
    }

    pub fn path_delay(&self, path: &[LinkId]) -> Rational64 {
        path.iter().map(|&l| self.links[l.0].delay).sum()
    }

    /// Node sequence of a link walk, or `None` if consecutive links do not chain.
    pub fn path_nodes(&self, path: &[LinkId]) -> Option<Vec<NodeId>> {
        let first = path.first()?;
        let mut nodes = vec![self.link(*first).tail];
        for &l in path {
            let link = self.link(l);
            if *nodes.last().unwrap() != link.tail {
                return None;
            }
            nodes.push(link.head);
        }
        Some(nodes)
    }

    pub fn to_topology_string(&self) -> String {
        let mut out = format!("nodes {}\n", self.node_count);
        for s in &self.spans {
            out.push_str(&format!("span {} {} {}", s.a, s.b, format_rational(s.length)));
            if let Capacity::Limited(u) = s.capacity {
                out.push_str(&format!(" {u}"));
            }
            out.push('\n');
        }
        out
    }

    /// Same topology with every span's capacity replaced.
    pub fn with_uniform_capacity(&self, capacity: Capacity) -> NetworkGraph {
        let mut g = self.clone();
        for s in &mut g.spans {
            s.capacity = capacity;
        }
        g
    }
}

/// Incremental constructor; `build` checks the graph invariants.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    node_count: usize,
    signal_speed: Rational64,
    spans: Vec<(NodeId, NodeId, Rational64, Capacity, usize)>,
}

impl GraphBuilder {
    pub fn new(node_count: usize) -> Self {
        GraphBuilder {
            node_count,
            signal_speed: Rational64::from_integer(DEFAULT_SIGNAL_SPEED),
            spans: Vec::new(),
        }
    }

    pub fn signal_speed(mut self, speed: Rational64) -> Self {
        self.signal_speed = speed;
        self
    }

    pub fn span(mut self, a: NodeId, b: NodeId, length: i64) -> Self {
        self.push_span(a, b, Rational64::from_integer(length), Capacity::Unlimited, 0);
        self
    }

    pub fn span_with(mut self, a: NodeId, b: NodeId, length: Rational64, capacity: Capacity) -> Self {
        self.push_span(a, b, length, capacity, 0);
        self
    }

    fn push_span(&mut self, a: NodeId, b: NodeId, length: Rational64, capacity: Capacity, line: usize) {
        self.spans.push((a, b, length, capacity, line));
    }

    pub fn build(self) -> Result<NetworkGraph, TopologyError> {
        let n = self.node_count;
        let mut spans = Vec::with_capacity(self.spans.len());
        let mut links = Vec::with_capacity(2 * self.spans.len());
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        let mut by_endpoints = BTreeMap::new();
        for (k, &(a, b, length, capacity, line)) in self.spans.iter().enumerate() {
            for node in [a, b] {
                if node >= n {
                    return Err(TopologyError::UnknownNode { line, node });
                }
            }
            if a == b {
                return Err(TopologyError::SelfLoop { line, node: a });
            }
            if length <= Rational64::zero() {
                return Err(TopologyError::NonPositiveCost { line });
            }
            if by_endpoints.contains_key(&(a, b)) {
                return Err(TopologyError::DuplicateSpan { line, a, b });
            }
            let id = SpanId(k);
            let forward = LinkId(2 * k);
            let backward = LinkId(2 * k + 1);
            let delay = length / self.signal_speed;
            for (lid, tail, head) in [(forward, a, b), (backward, b, a)] {
                links.push(DirectedLink { id: lid, tail, head, span: id, length, delay });
                outgoing[tail].push(lid);
                incoming[head].push(lid);
                by_endpoints.insert((tail, head), lid);
            }
            spans.push(Span { id, a, b, length, capacity, links: [forward, backward] });
        }

        if n > 0 {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0]);
            seen[0] = true;
            while let Some(v) = queue.pop_front() {
                for &l in &outgoing[v] {
                    let h = links[l.0].head;
                    if !seen[h] {
                        seen[h] = true;
                        queue.push_back(h);
                    }
                }
            }
            if let Some(v) = seen.iter().position(|s| !s) {
                return Err(TopologyError::Disconnected(v));
            }
        }

        Ok(NetworkGraph { node_count: n, spans, links, incoming, outgoing, by_endpoints })
    }
}

/// Parse a topology file with the default signal speed.
pub fn load_topology(text: &str) -> Result<NetworkGraph, TopologyError> {
    load_topology_with_speed(text, Rational64::from_integer(DEFAULT_SIGNAL_SPEED))
}

pub fn load_topology_with_speed(text: &str, signal_speed: Rational64) -> Result<NetworkGraph, TopologyError> {
    let mut builder: Option<GraphBuilder> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let parse_err = |msg: &str| TopologyError::Parse { line, msg: msg.to_string() };
        match fields[0] {
            "nodes" => {
                if builder.is_some() {
                    return Err(parse_err("repeated `nodes` header"));
                }
                if fields.len() != 2 {
                    return Err(parse_err("expected `nodes <count>`"));
                }
                let count: usize = fields[1].parse().map_err(|_| parse_err("invalid node count"))?;
                builder = Some(GraphBuilder::new(count).signal_speed(signal_speed));
            }
            "span" => {
                let b = builder.as_mut().ok_or(TopologyError::MissingHeader)?;
                if !(4..=5).contains(&fields.len()) {
                    return Err(parse_err("expected `span <a> <b> <cost> [capacity]`"));
                }
                let a: NodeId = fields[1].parse().map_err(|_| parse_err("invalid node id"))?;
                let z: NodeId = fields[2].parse().map_err(|_| parse_err("invalid node id"))?;
                let length = parse_rational(fields[3]).ok_or_else(|| parse_err("invalid cost"))?;
                let capacity = match fields.get(4) {
                    None => Capacity::Unlimited,
                    Some(&"inf") => Capacity::Unlimited,
                    Some(c) => Capacity::Limited(c.parse().map_err(|_| parse_err("invalid capacity"))?),
                };
                b.push_span(a, z, length, capacity, line);
            }
            other => return Err(parse_err(&format!("unknown directive `{other}`"))),
        }
    }
    builder.ok_or(TopologyError::MissingHeader)?.build()
}

/// Accepts integers, finite decimals (`12.5`) and fractions (`25/2`).
pub fn parse_rational(s: &str) -> Option<Rational64> {
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.parse().ok()?;
        let q: i64 = q.parse().ok()?;
        return (q != 0).then(|| Rational64::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) || frac_part.len() > 15 {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = digits.parse().ok()?;
    let denom = 10i64.checked_pow(frac_part.len() as u32)?;
    let r = Rational64::new(numer, denom);
    Some(if neg { -r } else { r })
}

pub fn format_rational(r: Rational64) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    // decimal expansion terminates iff the denominator has only 2 and 5 as factors
    let mut d = *r.denom();
    let mut places = 0u32;
    while d % 2 == 0 || d % 5 == 0 {
        if d % 2 == 0 {
            d /= 2;
        }
        if d % 5 == 0 {
            d /= 5;
        }
        places += 1;
    }
    if d == 1 && places <= 15 {
        let scale = 10i64.pow(places);
        let scaled = (r * Rational64::from_integer(scale)).to_integer();
        let sign = if scaled < 0 { "-" } else { "" };
        let abs = scaled.unsigned_abs();
        let s = format!("{:0width$}", abs, width = places as usize + 1);
        let (ip, fp) = s.split_at(s.len() - places as usize);
        format!("{sign}{ip}.{fp}")
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
