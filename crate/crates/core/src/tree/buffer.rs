//! Delay buffers that make every copy in a coding group arrive at the
//! destination at the same instant.
//!
//! The protection tree is timed bottom-up: a protection node emits when its
//! last input is ready, so every other input of a merge node waits in an
//! encoder buffer. At the destination each arriving branch (every primary
//! path and every protection link into the destination) is padded up to the
//! reference time, which is the latest arrival of the group.

use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::Zero;

use crate::graph::{LinkId, NetworkGraph, NodeId};
use crate::routing::topo_order;

use super::{DesignTree, ExtractedTree, TreeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EncodingInput {
    /// The signal of a demand sourced at the merge node.
    Local(usize),
    Link(LinkId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Arrival {
    Primary(usize),
    Protection(LinkId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BufferSite {
    Encoder { node: NodeId, input: EncodingInput },
    Destination(Arrival),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Buffer {
    pub site: BufferSite,
    pub delay: Rational64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PathKind {
    Primary,
    Protection,
}

/// End-to-end propagation delay of one route, without buffers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathDelay {
    pub kind: PathKind,
    pub demand: usize,
    pub links: Vec<LinkId>,
    pub delay: Rational64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BufferPlan {
    pub destination: NodeId,
    pub reference: Rational64,
    /// Sorted by site.
    pub buffers: Vec<Buffer>,
    pub paths: Vec<PathDelay>,
}

impl BufferPlan {
    pub fn buffer(&self, site: BufferSite) -> Option<Rational64> {
        self.buffers.iter().find(|b| b.site == site).map(|b| b.delay)
    }

    pub fn scaled(&self, k: Rational64) -> BufferPlan {
        BufferPlan {
            destination: self.destination,
            reference: self.reference * k,
            buffers: self.buffers.iter().map(|b| Buffer { site: b.site, delay: b.delay * k }).collect(),
            paths: self
                .paths
                .iter()
                .map(|p| PathDelay { delay: p.delay * k, ..p.clone() })
                .collect(),
        }
    }
}

/// Buffer plan using the graph's link delays.
pub fn compute_buffer_plan(g: &NetworkGraph, tree: &DesignTree, paths: &ExtractedTree) -> Result<BufferPlan, TreeError> {
    compute_buffer_plan_with(g, tree, paths, |l| Some(g.link(l).delay))
}

/// Buffer plan with caller-supplied link delays.
pub fn compute_buffer_plan_with(
    g: &NetworkGraph,
    tree: &DesignTree,
    paths: &ExtractedTree,
    delay: impl Fn(LinkId) -> Option<Rational64>,
) -> Result<BufferPlan, TreeError> {
    let dest = tree.destination;
    let delay_of = |l: LinkId| delay(l).ok_or(TreeError::MissingDelay(l));
    let route_delay = |r: &[LinkId]| -> Result<Rational64, TreeError> {
        r.iter().try_fold(Rational64::zero(), |acc, &l| Ok(acc + delay_of(l)?))
    };

    let mut path_delays = Vec::new();
    for (&demand, route) in &paths.primary {
        path_delays.push(PathDelay { kind: PathKind::Primary, demand, links: route.clone(), delay: route_delay(route)? });
    }
    for (&demand, route) in &paths.protection {
        path_delays.push(PathDelay {
            kind: PathKind::Protection,
            demand,
            links: route.clone(),
            delay: route_delay(route)?,
        });
    }

    let order = topo_order(g, &tree.protection_links)
        .ok_or_else(|| TreeError::Extraction { tree: 0, msg: "protection links contain a cycle".into() })?;
    let mut local: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for d in &tree.demands {
        local.entry(d.source).or_default().push(d.id);
    }
    let mut emit: BTreeMap<NodeId, Rational64> = BTreeMap::new();
    let mut buffers = Vec::new();
    let mut arrivals: Vec<(Arrival, Rational64)> = Vec::new();
    for v in order {
        let mut inputs: Vec<(EncodingInput, Rational64)> = Vec::new();
        if v != dest {
            for &id in local.get(&v).into_iter().flatten() {
                inputs.push((EncodingInput::Local(id), Rational64::zero()));
            }
        }
        for &l in g.incoming(v).iter().filter(|l| tree.protection_links.contains(l)) {
            let t = emit[&g.link(l).tail] + delay_of(l)?;
            if v == dest {
                arrivals.push((Arrival::Protection(l), t));
            } else {
                inputs.push((EncodingInput::Link(l), t));
            }
        }
        if v == dest {
            continue;
        }
        let ready = inputs.iter().map(|&(_, t)| t).max().unwrap_or_else(Rational64::zero);
        if inputs.len() >= 2 {
            for &(input, t) in &inputs {
                buffers.push(Buffer { site: BufferSite::Encoder { node: v, input }, delay: ready - t });
            }
        }
        emit.insert(v, ready);
    }
    for p in path_delays.iter().filter(|p| p.kind == PathKind::Primary) {
        arrivals.push((Arrival::Primary(p.demand), p.delay));
    }
    let reference = arrivals.iter().map(|&(_, t)| t).max().unwrap_or_else(Rational64::zero);
    for (a, t) in arrivals {
        buffers.push(Buffer { site: BufferSite::Destination(a), delay: reference - t });
    }
    buffers.sort_by_key(|b| b.site);
    Ok(BufferPlan { destination: dest, reference, buffers, paths: path_delays })
}

/// Walk every primary path and every route through the protection tree and
/// confirm that delay plus buffers equals the reference exactly.
pub fn check_equalization(
    g: &NetworkGraph,
    tree: &DesignTree,
    paths: &ExtractedTree,
    plan: &BufferPlan,
    delay: impl Fn(LinkId) -> Rational64,
) -> Result<(), String> {
    let buf = |site| plan.buffer(site).unwrap_or_else(Rational64::zero);
    for (&id, route) in &paths.primary {
        let total: Rational64 = route.iter().map(|&l| delay(l)).sum::<Rational64>() + buf(BufferSite::Destination(Arrival::Primary(id)));
        if total != plan.reference {
            return Err(format!("primary of demand {id} arrives at {total}, reference {}", plan.reference));
        }
    }
    let dest = tree.destination;
    for d in &tree.demands {
        // depth-first over every branch choice
        let start = buf(BufferSite::Encoder { node: d.source, input: EncodingInput::Local(d.id) });
        let mut stack = vec![(d.source, start, 0usize)];
        let mut routes = 0;
        while let Some((v, t, depth)) = stack.pop() {
            if depth > tree.protection_links.len() {
                return Err("protection links contain a cycle".into());
            }
            for &l in g.outgoing(v).iter().filter(|l| tree.protection_links.contains(l)) {
                let h = g.link(l).head;
                let arrive = t + delay(l);
                if h == dest {
                    routes += 1;
                    let total = arrive + buf(BufferSite::Destination(Arrival::Protection(l)));
                    if total != plan.reference {
                        return Err(format!(
                            "protection route of demand {} via {l} arrives at {total}, reference {}",
                            d.id, plan.reference
                        ));
                    }
                } else {
                    let wait = buf(BufferSite::Encoder { node: h, input: EncodingInput::Link(l) });
                    stack.push((h, arrive + wait, depth + 1));
                }
            }
        }
        if routes == 0 && d.source != dest {
            return Err(format!("demand {} has no protection route", d.id));
        }
    }
    Ok(())
}
