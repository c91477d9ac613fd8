use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{LinkId, NetworkGraph};
use crate::routing::topo_order;

use super::{DesignTree, TreeError};

/// Per-demand routes recovered from a tree's link sets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExtractedTree {
    /// Demand id to its primary path.
    pub primary: BTreeMap<usize, Vec<LinkId>>,
    /// Demand id to one route through the protection tree (lowest link id at
    /// every branching).
    pub protection: BTreeMap<usize, Vec<LinkId>>,
}

/// Split a tree's primary links into one path per demand.
///
/// Nodes are visited in topological order of the primary subgraph. At each
/// node the inputs (local demands by id, then incoming links by id) are paired
/// with outgoing links in ascending id order.
pub fn extract_paths(g: &NetworkGraph, tree: &DesignTree, index: usize) -> Result<ExtractedTree, TreeError> {
    let fail = |msg: String| TreeError::Extraction { tree: index, msg };
    let mut out = ExtractedTree::default();
    if tree.demands.is_empty() {
        return Ok(out);
    }
    let dest = tree.destination;
    let order = topo_order(g, &tree.primary_links).ok_or_else(|| fail("primary links contain a cycle".into()))?;

    let mut carried: BTreeMap<LinkId, usize> = BTreeMap::new();
    let mut paths: BTreeMap<usize, Vec<LinkId>> = BTreeMap::new();
    let mut sources: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for d in &tree.demands {
        sources.entry(d.source).or_default().push(d.id);
        paths.insert(d.id, Vec::new());
    }
    let mut visited = BTreeSet::new();
    for v in order.iter().copied().chain(sources.keys().copied()) {
        if !visited.insert(v) {
            continue;
        }
        let mut inputs: Vec<usize> = sources.get(&v).cloned().unwrap_or_default();
        for l in g.incoming(v).iter().filter(|l| tree.primary_links.contains(l)) {
            inputs.push(carried[l]);
        }
        if v == dest {
            continue;
        }
        let outs: Vec<LinkId> = g.outgoing(v).iter().copied().filter(|l| tree.primary_links.contains(l)).collect();
        if outs.len() != inputs.len() {
            return Err(fail(format!("node {v} has {} primary inputs but {} outputs", inputs.len(), outs.len())));
        }
        for (demand, l) in inputs.into_iter().zip(outs) {
            paths.get_mut(&demand).expect("known demand").push(l);
            carried.insert(l, demand);
        }
    }
    for d in &tree.demands {
        let path = &paths[&d.id];
        let end = path.last().map_or(d.source, |&l| g.link(l).head);
        if end != dest {
            return Err(fail(format!("primary path of demand {} ends at {end}", d.id)));
        }
    }
    out.primary = paths;

    for d in &tree.demands {
        let mut route = Vec::new();
        let mut v = d.source;
        while v != dest {
            let next = g
                .outgoing(v)
                .iter()
                .copied()
                .find(|l| tree.protection_links.contains(l))
                .ok_or_else(|| fail(format!("protection route of demand {} stops at node {v}", d.id)))?;
            if route.len() > tree.protection_links.len() {
                return Err(fail("protection links contain a cycle".into()));
            }
            route.push(next);
            v = g.link(next).head;
        }
        out.protection.insert(d.id, route);
    }
    Ok(out)
}
